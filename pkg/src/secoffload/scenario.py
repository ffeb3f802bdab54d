"""Scenario configuration: topology, workload, weights, security and episode shape.

Two presets ship with the package:

``desk``
    Task sizes of 1-5 MB with deadlines of 1.5-1.7 s. Every task has at least
    one placement that meets its deadline, so the environment is learnable.
``paper``
    The literal 1-5 GB sizes with 0.7-0.8 s deadlines. Runnable, but nearly
    every placement misses its deadline; useful only as a stress case.

JSON layout (all keys optional, defaults shown for the desk preset)::

    {
      "preset": "desk",
      "seed": 0,
      "topology": {
        "mec_frequency_hz": 1e10, "mec_energy_j_per_cycle": 1e-10,
        "cc_frequency_hz": 1e11,  "cc_energy_j_per_cycle": 1.2e-10,
        "cc_distances_m": [1000, 10000],
        "bandwidth_hz": 2e7, "tx_power_w": 0.5, "noise_power_w": 1e-13,
        "path_loss_exponent": 4,
        "nodes": null
      },
      "tasks": {"count": 100, "data_size_mb": [1, 5], "deadline_s": [1.5, 1.7],
                "app_mix": {"A": 1, "B": 1, "C": 1, "D": 1, "E": 1, "F": 1, "G": 1}},
      "weights": {"alpha1": 0.5, "alpha2": 0.5},
      "security": {"enc_cycles_per_byte": 40, "dec_cycles_per_byte": 40,
                   "hash_cycles_per_byte": 7},
      "episode": {"slots": 100, "slot_duration_s": 1.0, "max_steps": 100}
    }

``topology.nodes`` may replace the generated node list with explicit entries
``{"id", "kind": "MEC"|"CC", "frequency_hz", "energy_j_per_cycle", "distance_m"}``;
links from the MEC to each CC node are then built from the link parameters.
``data_size_gb`` is accepted in place of ``data_size_mb``. 1 MB = 10**6 bytes.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .costmodel import CostWeights
from .errors import ConfigError, InvalidArgument
from .security import SecurityParams
from .topology import (APP_CLASSES, AppClass, BITS_PER_BYTE, Link, Node, NodeKind, Topology,
                       default_topology)

BITS_PER_MB = 10 ** 6 * BITS_PER_BYTE


@dataclass(frozen=True)
class TopologyConfig:
    mec_frequency_hz: float = 10e9
    mec_energy_j_per_cycle: float = 1.0e-10
    cc_frequency_hz: float = 100e9
    cc_energy_j_per_cycle: float = 1.2e-10
    cc_distances_m: tuple[float, ...] = (1000.0, 10000.0)
    bandwidth_hz: float = 20e6
    tx_power_w: float = 0.5
    noise_power_w: float = 1e-13
    path_loss_exponent: float = 4.0
    nodes: tuple[dict, ...] | None = None

    def build(self) -> Topology:
        if self.nodes is None:
            return default_topology(
                self.mec_frequency_hz, cc_frequency=self.cc_frequency_hz,
                cc_distances=self.cc_distances_m, mec_energy_coeff=self.mec_energy_j_per_cycle,
                cc_energy_coeff=self.cc_energy_j_per_cycle, bandwidth=self.bandwidth_hz,
                tx_power=self.tx_power_w, noise_power=self.noise_power_w,
                path_loss_exponent=self.path_loss_exponent)
        nodes = [Node(int(n["id"]), NodeKind(n["kind"]), float(n["frequency_hz"]),
                      float(n["energy_j_per_cycle"]), float(n.get("distance_m", 0.0)))
                 for n in self.nodes]
        mec = next((n for n in nodes if n.kind is NodeKind.MEC), None)
        if mec is None:
            raise InvalidArgument("node list has no MEC")
        links = [Link.from_distance((mec.id, n.id), n.distance_from_mec, self.bandwidth_hz,
                                    self.tx_power_w, self.noise_power_w, self.path_loss_exponent)
                 for n in nodes if n.kind is NodeKind.CC]
        return Topology(tuple(nodes), tuple(links))


@dataclass(frozen=True)
class TaskConfig:
    count: int = 100
    data_size_mb: tuple[float, float] = (1.0, 5.0)
    deadline_s: tuple[float, float] = (1.5, 1.7)
    app_mix: tuple[tuple[str, float], ...] = tuple((c.label, 1.0) for c in APP_CLASSES)

    @property
    def data_size_bits(self) -> tuple[float, float]:
        return (self.data_size_mb[0] * BITS_PER_MB, self.data_size_mb[1] * BITS_PER_MB)

    @property
    def mix(self) -> dict[AppClass, float]:
        return {AppClass[label]: w for label, w in self.app_mix}


@dataclass(frozen=True)
class EpisodeConfig:
    slots: int = 100
    slot_duration_s: float = 1.0
    max_steps: int | None = 100    # training-time step budget; None = whole task queue


@dataclass(frozen=True)
class Scenario:
    name: str = "desk"
    seed: int = 0
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    tasks: TaskConfig = field(default_factory=TaskConfig)
    weights: CostWeights = field(default_factory=CostWeights)
    security: SecurityParams = field(default_factory=SecurityParams)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)

    def build_topology(self) -> Topology:
        return self.topology.build()

    def with_mec_frequency(self, hz: float) -> "Scenario":
        return replace(self, topology=replace(self.topology, mec_frequency_hz=float(hz)))

    def with_task_count(self, count: int) -> "Scenario":
        return replace(self, tasks=replace(self.tasks, count=int(count)))

    def with_mean_data_size(self, mean_mb: float) -> "Scenario":
        """Keep the 1:5 spread of the default range around a new mean."""
        lo, hi = mean_mb / 3.0, 5.0 * mean_mb / 3.0
        return replace(self, tasks=replace(self.tasks, data_size_mb=(lo, hi)))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["preset"] = d.pop("name")
        d["tasks"]["app_mix"] = dict(self.tasks.app_mix)
        d["topology"]["cc_distances_m"] = list(self.topology.cc_distances_m)
        d["tasks"]["data_size_mb"] = list(self.tasks.data_size_mb)
        d["tasks"]["deadline_s"] = list(self.tasks.deadline_s)
        if self.topology.nodes is not None:
            d["topology"]["nodes"] = [dict(n) for n in self.topology.nodes]
        return d


DESK = Scenario()
PAPER = Scenario(
    name="paper",
    tasks=TaskConfig(data_size_mb=(1000.0, 5000.0), deadline_s=(0.7, 0.8)),
)
PRESETS = {"desk": DESK, "paper": PAPER}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _pair(value, what) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a [low, high] pair") from None
    if not 0 < lo <= hi:
        raise ConfigError(f"{what} must satisfy 0 < low <= high, got {value}")
    return lo, hi


def _section(cls, base, data: dict, what: str):
    known = {f for f in base.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {what}: {sorted(unknown)}")
    return replace(base, **data)


def scenario_from_dict(data: dict[str, Any], default_preset: str = "desk") -> Scenario:
    """Build a scenario from the JSON layout above, starting from a preset."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    data = copy.deepcopy(data)
    base = preset(data.pop("preset", default_preset))
    unknown = set(data) - {"seed", "topology", "tasks", "weights", "security", "episode", "agent"}
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    data.pop("agent", None)
    try:
        topo = dict(data.get("topology", {}))
        if "cc_distances_m" in topo:
            topo["cc_distances_m"] = tuple(float(x) for x in topo["cc_distances_m"])
        if topo.get("nodes") is not None:
            topo["nodes"] = tuple(dict(n) for n in topo["nodes"])
        topology = _section(TopologyConfig, base.topology, topo, "topology")

        tasks = dict(data.get("tasks", {}))
        if "data_size_gb" in tasks:
            lo, hi = _pair(tasks.pop("data_size_gb"), "tasks.data_size_gb")
            tasks["data_size_mb"] = (lo * 1000.0, hi * 1000.0)
        if "data_size_mb" in tasks:
            tasks["data_size_mb"] = _pair(tasks["data_size_mb"], "tasks.data_size_mb")
        if "deadline_s" in tasks:
            tasks["deadline_s"] = _pair(tasks["deadline_s"], "tasks.deadline_s")
        if "app_mix" in tasks:
            mix = tasks["app_mix"]
            items = mix.items() if isinstance(mix, dict) else [(label, 1.0) for label in mix]
            for label, _ in items:
                if label not in AppClass.__members__:
                    raise ConfigError(f"unknown application class {label!r}")
            tasks["app_mix"] = tuple((str(k), float(v)) for k, v in items)
        task_cfg = _section(TaskConfig, base.tasks, tasks, "tasks")
        if task_cfg.count < 1:
            raise ConfigError("tasks.count must be >= 1")

        weights = _section(CostWeights, base.weights, data.get("weights", {}), "weights")
        security = _section(SecurityParams, base.security, data.get("security", {}), "security")
        episode = _section(EpisodeConfig, base.episode, data.get("episode", {}), "episode")
        if episode.slots < 1 or episode.slot_duration_s <= 0:
            raise ConfigError("episode.slots must be >= 1 and slot_duration_s > 0")
        if episode.max_steps is not None and episode.max_steps < 1:
            raise ConfigError("episode.max_steps must be >= 1 or null")
        scenario = Scenario(base.name, int(data.get("seed", base.seed)), topology, task_cfg,
                            weights, security, episode)
        scenario.build_topology()
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid scenario: {exc}") from exc
    return scenario


def load_json(path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


def load_scenario(path, default_preset: str = "desk") -> Scenario:
    return scenario_from_dict(load_json(path), default_preset)
