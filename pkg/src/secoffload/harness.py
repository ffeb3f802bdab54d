"""Experiment runner: train, evaluate greedily, and export one metrics row per cell.

A sweep varies one axis of the base scenario:

``task_count``
    tasks per episode (training episodes still stop after ``max_steps``;
    evaluation runs the whole queue).
``mec_capacity``
    MEC frequency in GHz.
``data_size``
    mean task size in MB; sizes are drawn from ``[v/3, 5v/3]``.

Seeding. Repetition ``r`` trains with seed ``seed + r`` for every policy and
axis value, and evaluates on ``eval_episodes`` task queues derived from
``(seed, r)`` alone. All policies therefore face identical evaluation
workloads.

CSV layout: a header line with :data:`ROW_FIELDS`, then one row per cell in
cell order. Floats are written with ``repr`` so that a file is byte-stable and
round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .agent import AgentConfig, agent_config_from_dict
from .baselines import build_policy, normalize_name
from .env import OffloadingEnv
from .errors import ConfigError, InvalidArgument
from .scenario import DESK, Scenario, load_json, scenario_from_dict

AXES = ("task_count", "mec_capacity", "data_size")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Sweep:
    axis: str
    values: tuple
    policies: tuple = ("LC", "CO", "RC", "DQN", "DQN+NN", "SARMTO")
    repetitions: int = 3
    base: Scenario = DESK
    seed: int = 0
    episodes: int = 300
    eval_episodes: int = 20
    agent: AgentConfig = field(default_factory=AgentConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("a sweep needs at least one value")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.policies:
            raise ConfigError("a sweep needs at least one policy")
        if self.episodes < 1 or self.eval_episodes < 1:
            raise ConfigError("episodes and eval_episodes must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "policies", tuple(normalize_name(p) for p in self.policies))

    def scenario_at(self, value) -> Scenario:
        return apply_axis(self.base, self.axis, value)

    def cells(self):
        """(value, policy, repetition) in export order."""
        for value in self.values:
            for policy in self.policies:
                for rep in range(self.repetitions):
                    yield value, policy, rep


def apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    if axis == "task_count":
        if int(value) != value or value < 1:
            raise ConfigError(f"task_count values must be positive integers, got {value}")
        return scenario.with_task_count(int(value))
    if axis == "mec_capacity":
        if not value > 0:
            raise ConfigError(f"mec_capacity must be positive, got {value}")
        return scenario.with_mec_frequency(float(value) * 1e9)
    if axis == "data_size":
        if not value > 0:
            raise ConfigError(f"data_size must be positive, got {value}")
        return scenario.with_mean_data_size(float(value))
    raise ConfigError(f"axis must be one of {AXES}, got {axis!r}")


@dataclass(frozen=True)
class MetricsRow:
    """Greedy-evaluation metrics of one trained (or fixed) policy.

    Per-episode quantities (``system_cost``, ``total_energy``,
    ``deadline_violations``) are means over the evaluation episodes;
    ``avg_delay`` is per task. ``energy_efficiency`` is tasks finished within
    their deadline per joule, and ``offloading_rate`` the share of tasks sent
    to CC nodes, both pooled over all evaluation episodes.
    """

    policy: str
    axis: str
    axis_value: float
    repetition: int
    seed: int
    system_cost: float
    avg_delay: float
    total_energy: float
    energy_efficiency: float
    offloading_rate: float
    deadline_violations: float


ROW_FIELDS = tuple(f.name for f in fields(MetricsRow))
METRIC_FIELDS = ROW_FIELDS[5:]
_INT_FIELDS = {"repetition", "seed"}
_STR_FIELDS = {"policy", "axis"}


def evaluation_seeds(seed: int, repetition: int, count: int) -> list[int]:
    ss = np.random.SeedSequence([seed, repetition, 0xE7A1])
    return [int(x) for x in ss.generate_state(count, dtype=np.uint64)]


def evaluate(policy, scenario: Scenario, seeds: Sequence[int]) -> dict[str, float]:
    """Run ``policy`` greedily on a full task queue per seed and pool the metrics."""
    env = OffloadingEnv(scenario, max_steps=None)
    cost = delay = energy = 0.0
    tasks = offloaded = violated = 0
    for s in seeds:
        state = env.reset(s)
        while not env.done:
            out = env.step(policy.act(env, state))
            b = out.breakdown
            cost += b.cost(env.weights)
            delay += b.delay
            energy += b.energy
            offloaded += out.offloaded
            violated += out.violated_deadline
            state = out.next_state
        tasks += env.n_steps
    n = len(seeds)
    return {
        "system_cost": cost / n,
        "avg_delay": delay / tasks,
        "total_energy": energy / n,
        "energy_efficiency": (tasks - violated) / energy if energy > 0 else 0.0,
        "offloading_rate": offloaded / tasks,
        "deadline_violations": violated / n,
    }


def run_cell(scenario: Scenario, policy: str, *, seed: int, repetition: int = 0,
             episodes: int = 300, eval_episodes: int = 20, agent: AgentConfig | None = None,
             axis: str = "none", axis_value: float = 0.0) -> MetricsRow:
    train_seed = seed + repetition
    env = OffloadingEnv(scenario)
    pol, _ = build_policy(policy, env, seed=train_seed, base=agent, episodes=episodes)
    metrics = evaluate(pol, scenario, evaluation_seeds(seed, repetition, eval_episodes))
    return MetricsRow(pol.name, axis, float(axis_value), repetition, train_seed, **metrics)


def run_sweep(sweep: Sweep, *, out=None, fmt: str = "csv",
              progress: Callable[[MetricsRow], None] | None = None) -> list[MetricsRow]:
    """Run every cell in order. If ``out`` is given, rows finished so far are
    written there even when a later cell fails."""
    rows: list[MetricsRow] = []
    try:
        for value, policy, rep in sweep.cells():
            row = run_cell(sweep.scenario_at(value), policy, seed=sweep.seed, repetition=rep,
                           episodes=sweep.episodes, eval_episodes=sweep.eval_episodes,
                           agent=sweep.agent, axis=sweep.axis, axis_value=value)
            rows.append(row)
            if progress is not None:
                progress(row)
    finally:
        if out is not None:
            export(rows, out, fmt)
    return rows


# -- config ----------------------------------------------------------------

_SWEEP_KEYS = {"axis", "values", "policies", "repetitions", "seed", "episodes", "eval_episodes",
               "scenario", "agent", "preset"}


def sweep_from_dict(data: dict, default_preset: str = "desk") -> Sweep:
    """Sweep from JSON: ``{"axis", "values", "policies"?, "repetitions"?, "seed"?,
    "episodes"?, "eval_episodes"?, "scenario"?, "agent"?}``."""
    if not isinstance(data, dict):
        raise ConfigError("sweep config must be a JSON object")
    unknown = set(data) - _SWEEP_KEYS
    if unknown:
        raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
    if "axis" not in data or "values" not in data:
        raise ConfigError("sweep config needs 'axis' and 'values'")
    scen = dict(data.get("scenario", {}))
    if "preset" in data:
        scen.setdefault("preset", data["preset"])
    base = scenario_from_dict(scen, default_preset)
    try:
        agent = agent_config_from_dict(data.get("agent", {}))
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError(f"invalid agent settings: {exc}") from exc
    kwargs = {k: data[k] for k in ("repetitions", "seed", "episodes", "eval_episodes") if k in data}
    if "policies" in data:
        kwargs["policies"] = tuple(data["policies"])
    values = data["values"]
    if not isinstance(values, list):
        raise ConfigError("'values' must be a list")
    return Sweep(data["axis"], tuple(values), base=base, agent=agent, **kwargs)


def load_sweep(path, default_preset: str = "desk") -> Sweep:
    return sweep_from_dict(load_json(path), default_preset)


# -- export ------------------------------------------------------------------

def _cell(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def to_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([_cell(getattr(r, f)) for f in ROW_FIELDS])
    return buf.getvalue()


def to_json(rows: Sequence[MetricsRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1) + "\n"


def export(rows: Sequence[MetricsRow], path, fmt: str = "csv") -> Path:
    if fmt not in FORMATS:
        raise InvalidArgument(f"format must be one of {FORMATS}")
    path = Path(path)
    path.write_text(to_csv(rows) if fmt == "csv" else to_json(rows))
    return path


def _coerce(name: str, value):
    if name in _STR_FIELDS:
        return str(value)
    if name in _INT_FIELDS:
        return int(value)
    return float(value)


def parse_csv(text: str) -> list[MetricsRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != ROW_FIELDS:
        raise InvalidArgument("unexpected CSV header")
    return [MetricsRow(**{k: _coerce(k, v) for k, v in zip(ROW_FIELDS, line)}) for line in reader]


def parse_json(text: str) -> list[MetricsRow]:
    return [MetricsRow(**{k: _coerce(k, d[k]) for k in ROW_FIELDS}) for d in json.loads(text)]


def load_rows(path) -> list[MetricsRow]:
    path = Path(path)
    text = path.read_text()
    return parse_json(text) if path.suffix.lower() == ".json" else parse_csv(text)


# -- aggregation ---------------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    policy: str
    axis_value: float
    n: int
    mean: dict
    std: dict


def summarize(rows: Sequence[MetricsRow]) -> list[Summary]:
    """Mean and population standard deviation of every metric per (policy, axis value),
    in order of first appearance."""
    groups: dict[tuple, list[MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.policy, r.axis_value), []).append(r)
    out = []
    for (policy, value), group in groups.items():
        data = np.array([[getattr(r, f) for f in METRIC_FIELDS] for r in group], dtype=float)
        out.append(Summary(policy, value, len(group),
                           dict(zip(METRIC_FIELDS, data.mean(axis=0).tolist())),
                           dict(zip(METRIC_FIELDS, data.std(axis=0).tolist()))))
    return out


def format_summary(summaries: Sequence[Summary], metrics=("system_cost", "total_energy",
                                                          "offloading_rate")) -> str:
    lines = ["policy    value      n  " + "  ".join(f"{m:>26}" for m in metrics)]
    for s in summaries:
        cols = "  ".join(f"{s.mean[m]:>14.6g} ± {s.std[m]:<9.3g}" for m in metrics)
        lines.append(f"{s.policy:<8}  {s.axis_value:<9g}  {s.n:<2} {cols}")
    return "\n".join(lines)
