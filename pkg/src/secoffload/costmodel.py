"""Per-task delay/energy breakdowns, the weighted system cost and an exhaustive optimum."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, SearchSpaceTooLarge
from .security import SecurityParams, overhead
from .topology import Link, Task, Topology


@dataclass(frozen=True)
class CostWeights:
    alpha1: float = 0.5   # delay weight
    alpha2: float = 0.5   # energy weight

    def __post_init__(self):
        if not (0.0 <= self.alpha1 <= 1.0 and 0.0 <= self.alpha2 <= 1.0):
            raise InvalidArgument("cost weights must lie in [0, 1]")
        if not math.isclose(self.alpha1 + self.alpha2, 1.0, rel_tol=0, abs_tol=1e-12):
            raise InvalidArgument("cost weights must sum to 1")


@dataclass(frozen=True)
class Assignment:
    task_id: int
    node_id: int      # execution target
    source_id: int    # where the task data lives (the MEC)


@dataclass(frozen=True)
class CostBreakdown:
    t_comp: float = 0.0
    t_comm: float = 0.0
    t_sec: float = 0.0
    e_comp: float = 0.0
    e_comm: float = 0.0
    e_sec: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidArgument(f"{f.name} must be non-negative")

    @property
    def delay(self) -> float:
        return self.t_comp + self.t_comm + self.t_sec

    @property
    def energy(self) -> float:
        return self.e_comp + self.e_comm + self.e_sec

    def cost(self, weights: CostWeights) -> float:
        return weights.alpha1 * self.delay + weights.alpha2 * self.energy


BREAKDOWN_FIELDS = tuple(f.name for f in fields(CostBreakdown))


def comm_rate(link: Link) -> float:
    """Shannon rate of ``link`` in bits/s."""
    snr = link.tx_power * link.channel_gain / link.noise_power
    return link.bandwidth * math.log2(1.0 + snr)


def task_cost(task: Task, assignment: Assignment, topology: Topology,
              security_params: SecurityParams) -> CostBreakdown:
    target = topology.node(assignment.node_id)
    source = topology.node(assignment.source_id)
    t_comp = task.cpu_cycles / target.frequency
    e_comp = target.energy_coeff * task.cpu_cycles
    if target.id == source.id:
        return CostBreakdown(t_comp=t_comp, e_comp=e_comp)
    link = topology.link_between(source.id, target.id)
    t_comm = task.data_size / comm_rate(link)
    e_comm = link.tx_power * t_comm
    t_sec, e_sec = overhead(task, source, target, security_params)
    return CostBreakdown(t_comp, t_comm, t_sec, e_comp, e_comm, e_sec)


def breakdown_table(tasks: Sequence[Task], topology: Topology,
                    security_params: SecurityParams) -> np.ndarray:
    """Array ``[task, node, component]`` of every placement's breakdown (MEC as source).

    Component order follows :data:`BREAKDOWN_FIELDS`.
    """
    mec = topology.mec
    out = np.zeros((len(tasks), len(topology.nodes), len(BREAKDOWN_FIELDS)))
    for i, task in enumerate(tasks):
        for k, node in enumerate(topology.nodes):
            b = task_cost(task, Assignment(task.id, node.id, mec.id), topology, security_params)
            out[i, k] = (b.t_comp, b.t_comm, b.t_sec, b.e_comp, b.e_comm, b.e_sec)
    return out


def system_cost(breakdowns: Iterable[CostBreakdown], weights: CostWeights) -> float:
    total_delay = 0.0
    total_energy = 0.0
    for b in breakdowns:
        total_delay += b.t_comp + b.t_comm + b.t_sec
        total_energy += b.e_comp + b.e_comm + b.e_sec
    return weights.alpha1 * total_delay + weights.alpha2 * total_energy


def meets_deadline(task: Task, breakdown: CostBreakdown) -> bool:
    return breakdown.t_comp + breakdown.t_comm + breakdown.t_sec <= task.deadline


@dataclass(frozen=True)
class BruteForceResult:
    assignment: tuple[int, ...] | None   # node id per task, in task order
    cost: float                          # math.inf when infeasible
    feasible: bool
    evaluated: int


MAX_SEARCH_SPACE = 10 ** 7


def brute_force_optimum(tasks: Sequence[Task], topology: Topology, weights: CostWeights,
                        security_params: SecurityParams, *,
                        slot_duration: float | None = None,
                        max_space: int = MAX_SEARCH_SPACE) -> BruteForceResult:
    """Cheapest deadline-feasible assignment by full enumeration.

    With ``slot_duration`` set, an assignment must also keep the cycles placed on
    every node within ``frequency * slot_duration``. Ties go to the
    lexicographically smallest node-id vector.
    """
    space = len(topology.nodes) ** len(tasks)
    if space > max_space:
        raise SearchSpaceTooLarge(f"{space} assignments exceeds the guard of {max_space}")
    mec_id = topology.mec.id
    node_ids = sorted(n.id for n in topology.nodes)
    table = {(t.id, nid): task_cost(t, Assignment(t.id, nid, mec_id), topology, security_params)
             for t in tasks for nid in node_ids}

    best, best_cost, evaluated = None, math.inf, 0
    for combo in itertools.product(node_ids, repeat=len(tasks)):
        evaluated += 1
        parts = [table[(t.id, nid)] for t, nid in zip(tasks, combo)]
        if not all(meets_deadline(t, b) for t, b in zip(tasks, parts)):
            continue
        if slot_duration is not None:
            load: dict[int, int] = {}
            for t, nid in zip(tasks, combo):
                load[nid] = load.get(nid, 0) + t.cpu_cycles
            if any(load[nid] > topology.node(nid).frequency * slot_duration for nid in load):
                continue
        c = system_cost(parts, weights)
        if c < best_cost:
            best, best_cost = combo, c
    return BruteForceResult(best, best_cost, best is not None, evaluated)
