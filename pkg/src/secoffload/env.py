"""Sequential offloading MDP: one placement decision per task.

Each episode draws a task queue, spreads it over ``slots`` time slots and asks
for one node per task. Node capacity is tracked per slot (``frequency *
slot_duration`` cycles) and exposed in the state. Rewards are the negative
weighted cost of the placed task in raw units; deadline misses are reported,
never penalised here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .costmodel import BREAKDOWN_FIELDS, CostBreakdown, CostWeights, breakdown_table
from .errors import InvalidArgument, ProtocolViolation
from .scenario import Scenario
from .topology import APP_CLASSES, BITS_PER_BYTE, Task, generate_tasks

MAX_CYCLES_PER_BYTE = max(c.cycles_per_byte for c in APP_CLASSES)
_CLASS_INDEX = {c: i for i, c in enumerate(APP_CLASSES)}


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray
    reward: float
    done: bool
    breakdown: CostBreakdown
    violated_deadline: bool
    action: int
    offloaded: bool


class OffloadingEnv:
    """Environment over a :class:`Scenario`.

    ``max_steps`` caps the episode length; by default the scenario's training
    budget applies. Pass ``max_steps=None`` to run the whole task queue.
    """

    _USE_SCENARIO = object()

    def __init__(self, scenario: Scenario, max_steps=_USE_SCENARIO):
        self.scenario = scenario
        self.topology = scenario.build_topology()
        self.weights = scenario.weights
        self.security = scenario.security
        self.max_steps = scenario.episode.max_steps if max_steps is self._USE_SCENARIO else max_steps
        self.n_actions = len(self.topology.nodes)
        self.mec_index = self.topology.mec_index
        self.full_capacity = np.array([n.frequency for n in self.topology.nodes]) \
            * scenario.episode.slot_duration_s
        self.state_dim = 3 + len(APP_CLASSES) + self.n_actions + 1

        lo_bits, hi_bits = scenario.tasks.data_size_bits
        self._size_scale = hi_bits
        self._cycle_scale = hi_bits / BITS_PER_BYTE * MAX_CYCLES_PER_BYTE
        self._deadline_scale = scenario.tasks.deadline_s[1]

        self.tasks: list[Task] = []
        self._table = np.zeros((0, self.n_actions, len(BREAKDOWN_FIELDS)))
        self._delays = np.zeros((0, self.n_actions))
        self._t = 0
        self._n_steps = 0
        self._tasks_per_slot = 1
        self._capacity = self.full_capacity.copy()
        self._done = True

    # -- episode control ---------------------------------------------------

    def reset(self, seed=None, tasks: Sequence[Task] | None = None) -> np.ndarray:
        """Start an episode with a fresh task queue drawn from ``seed`` (or the given tasks)."""
        if tasks is None:
            cfg = self.scenario.tasks
            tasks = generate_tasks(cfg.count, cfg.data_size_bits, cfg.deadline_s, cfg.mix,
                                   rng=np.random.default_rng(seed))
        tasks = list(tasks)
        if not tasks:
            raise InvalidArgument("an episode needs at least one task")
        self.tasks = tasks
        self._n_steps = len(tasks) if self.max_steps is None else min(len(tasks), self.max_steps)
        self._tasks_per_slot = max(1, math.ceil(len(tasks) / self.scenario.episode.slots))
        self._table = breakdown_table(tasks[:self._n_steps], self.topology, self.security)
        self._delays = self._table[:, :, 0:3].sum(axis=2)
        self._t = 0
        self._capacity = self.full_capacity.copy()
        self._done = False
        return self.observation()

    @property
    def done(self) -> bool:
        return self._done

    @property
    def step_index(self) -> int:
        return self._t

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def current_task(self) -> Task:
        if self._done:
            raise ProtocolViolation("episode is over; call reset()")
        return self.tasks[self._t]

    @property
    def remaining_capacity(self) -> np.ndarray:
        return self._capacity.copy()

    # -- observation -------------------------------------------------------

    def observation(self) -> np.ndarray:
        s = np.zeros(self.state_dim)
        if not self._done:
            task = self.tasks[self._t]
            s[0] = task.data_size / self._size_scale
            s[1] = task.cpu_cycles / self._cycle_scale
            s[2] = task.deadline / self._deadline_scale
            s[3 + _CLASS_INDEX[task.app_class]] = 1.0
        k = 3 + len(APP_CLASSES)
        s[k:k + self.n_actions] = np.maximum(self._capacity, 0.0) / self.full_capacity
        s[-1] = (self._n_steps - self._t) / self._n_steps if self._n_steps else 0.0
        return np.clip(s, 0.0, 1.0)

    def projected_delays(self) -> np.ndarray:
        """Completion delay (comp + comm + sec) of the current task on every node."""
        if self._done:
            raise ProtocolViolation("episode is over; call reset()")
        return self._delays[self._t].copy()

    def breakdown_for(self, action: int) -> CostBreakdown:
        if self._done:
            raise ProtocolViolation("episode is over; call reset()")
        return CostBreakdown(*(float(x) for x in self._table[self._t, action]))

    def feasible_actions(self) -> list[int]:
        """Nodes with room left in this slot on which the current task meets its deadline."""
        if self._done:
            raise ProtocolViolation("episode is over; call reset()")
        task = self.tasks[self._t]
        delays = self._delays[self._t]
        return [k for k in range(self.n_actions)
                if self._capacity[k] >= task.cpu_cycles and delays[k] <= task.deadline]

    # -- transition ---------------------------------------------------------

    def step(self, action: int) -> StepOutcome:
        if self._done:
            raise ProtocolViolation("step() called on a finished episode")
        action = int(action)
        if not 0 <= action < self.n_actions:
            raise InvalidArgument(f"action {action} outside 0..{self.n_actions - 1}")
        task = self.tasks[self._t]
        breakdown = self.breakdown_for(action)
        reward = -breakdown.cost(self.weights)
        violated = breakdown.delay > task.deadline
        self._capacity[action] -= task.cpu_cycles

        self._t += 1
        if self._t >= self._n_steps:
            self._done = True
        elif self._t % self._tasks_per_slot == 0:
            self._capacity = self.full_capacity.copy()
        return StepOutcome(self.observation(), reward, self._done, breakdown, violated, action,
                           action != self.mec_index)


@dataclass(frozen=True)
class RewardNormalizer:
    """Affine rescaling of the weighted per-task cost into [0, 1] for training.

    The weighted cost ``alpha1 * delay + alpha2 * energy`` is scaled as a
    whole; scaling delay and energy separately would change their relative
    weight and with it the optimal placement. Bounds come from
    deadline-feasible placements of a calibration sample, so a placement far
    outside that range (a hopeless link, say) saturates at 1. Reported metrics
    never pass through this.
    """

    cost_bounds: tuple[float, float]
    weights: CostWeights

    def cost(self, delay: float, energy: float) -> float:
        lo, hi = self.cost_bounds
        raw = self.weights.alpha1 * delay + self.weights.alpha2 * energy
        if hi <= lo:
            return 0.0
        return min(1.0, max(0.0, (raw - lo) / (hi - lo)))

    def reward(self, breakdown: CostBreakdown) -> float:
        return -self.cost(breakdown.delay, breakdown.energy)

    @classmethod
    def fit(cls, scenario: Scenario, samples: int = 2000, seed: int = 2024) -> "RewardNormalizer":
        cfg = scenario.tasks
        w = scenario.weights
        tasks = generate_tasks(samples, cfg.data_size_bits, cfg.deadline_s, cfg.mix, rng_seed=seed)
        table = breakdown_table(tasks, scenario.build_topology(), scenario.security)
        delay = table[:, :, 0:3].sum(axis=2)
        cost = w.alpha1 * delay + w.alpha2 * table[:, :, 3:6].sum(axis=2)
        deadlines = np.array([t.deadline for t in tasks])[:, None]
        mask = delay <= deadlines
        if not mask.any():
            # nothing is feasible (e.g. the paper preset): fall back to each task's fastest node
            mask = delay == delay.min(axis=1, keepdims=True)
        return cls((float(cost[mask].min()), float(cost[mask].max())), w)
