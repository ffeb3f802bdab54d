"""Network nodes, links, tasks and the application-complexity table."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidArgument

BITS_PER_BYTE = 8


class AppClass(enum.Enum):
    """Application labels and their CPU cycles per input byte."""

    A = 330      # gzip
    B = 500      # health monitoring
    C = 960      # pdf2text (N900 data sheet)
    D = 1900     # x264 CBR encode
    E = 5900     # html2text
    F = 8900     # pdf2text (E72 data sheet)
    G = 12000    # augmented reality

    @property
    def label(self) -> str:
        return self.name

    @property
    def cycles_per_byte(self) -> int:
        return self.value


APP_CLASSES: tuple[AppClass, ...] = tuple(AppClass)


def cycles_for(data_size: int, app_class: AppClass) -> int:
    """Required CPU cycles for ``data_size`` bits of input of the given class."""
    if isinstance(data_size, bool) or not isinstance(data_size, (int, np.integer)):
        if not (isinstance(data_size, float) and data_size.is_integer()):
            raise InvalidArgument(f"data size must be a whole number of bits, got {data_size!r}")
    data_size = int(data_size)
    if data_size <= 0:
        raise InvalidArgument(f"data size must be positive, got {data_size}")
    if data_size % BITS_PER_BYTE:
        raise InvalidArgument(f"data size {data_size} bits is not a whole number of bytes")
    return (data_size // BITS_PER_BYTE) * app_class.cycles_per_byte


@dataclass(frozen=True)
class Task:
    id: int
    data_size: int        # bits
    cpu_cycles: int
    deadline: float       # seconds
    app_class: AppClass

    def __post_init__(self):
        if self.data_size <= 0:
            raise InvalidArgument(f"task {self.id}: data size must be positive")
        if not self.deadline > 0:
            raise InvalidArgument(f"task {self.id}: deadline must be positive")
        if self.cpu_cycles != cycles_for(self.data_size, self.app_class):
            raise InvalidArgument(f"task {self.id}: cpu_cycles inconsistent with data size and class")

    @property
    def data_bytes(self) -> int:
        return self.data_size // BITS_PER_BYTE

    @classmethod
    def make(cls, id: int, data_size: int, deadline: float, app_class: AppClass) -> "Task":
        return cls(id, int(data_size), cycles_for(data_size, app_class), float(deadline), app_class)


class NodeKind(str, enum.Enum):
    MEC = "MEC"
    CC = "CC"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    frequency: float          # cycles / s
    energy_coeff: float       # J / cycle
    distance_from_mec: float  # m

    def __post_init__(self):
        if not self.frequency > 0:
            raise InvalidArgument(f"node {self.id}: frequency must be positive")
        if self.energy_coeff < 0:
            raise InvalidArgument(f"node {self.id}: energy coefficient must be non-negative")
        if self.kind is NodeKind.MEC and self.distance_from_mec != 0:
            raise InvalidArgument(f"node {self.id}: an MEC node sits at distance 0")
        if self.distance_from_mec < 0:
            raise InvalidArgument(f"node {self.id}: negative distance")


@dataclass(frozen=True)
class Link:
    endpoints: tuple[int, int]
    bandwidth: float           # Hz
    channel_gain: float
    tx_power: float            # W
    noise_power: float         # W
    path_loss_exponent: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidArgument("link bandwidth must be positive")
        if not self.noise_power > 0:
            raise InvalidArgument("link noise power must be positive")
        if not self.channel_gain > 0:
            raise InvalidArgument("link channel gain must be positive")
        if self.tx_power < 0:
            raise InvalidArgument("link transmit power must be non-negative")

    @classmethod
    def from_distance(cls, endpoints, distance, bandwidth, tx_power, noise_power,
                      path_loss_exponent) -> "Link":
        """Log-distance gain ``distance ** -exponent`` (distance in metres)."""
        if not distance > 0:
            raise InvalidArgument("link distance must be positive")
        gain = float(distance) ** (-float(path_loss_exponent))
        return cls(tuple(endpoints), float(bandwidth), gain, float(tx_power),
                   float(noise_power), float(path_loss_exponent))


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidArgument("node ids must be unique")
        mecs = [n for n in self.nodes if n.kind is NodeKind.MEC]
        if len(mecs) != 1:
            raise InvalidArgument(f"expected exactly one MEC node, found {len(mecs)}")
        mec = mecs[0].id
        for n in self.nodes:
            if n.kind is NodeKind.CC and self._find_link(mec, n.id) is None:
                raise InvalidArgument(f"CC node {n.id} has no link to the MEC")

    def _find_link(self, a: int, b: int) -> Link | None:
        for link in self.links:
            if set(link.endpoints) == {a, b}:
                return link
        return None

    @property
    def mec(self) -> Node:
        return next(n for n in self.nodes if n.kind is NodeKind.MEC)

    @property
    def mec_index(self) -> int:
        return next(i for i, n in enumerate(self.nodes) if n.kind is NodeKind.MEC)

    @property
    def cc_indices(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.nodes) if n.kind is NodeKind.CC)

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise InvalidArgument(f"unknown node id {node_id}")

    def index_of(self, node_id: int) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise InvalidArgument(f"unknown node id {node_id}")

    def link_between(self, a: int, b: int) -> Link:
        link = self._find_link(a, b)
        if link is None:
            raise InvalidArgument(f"no link between nodes {a} and {b}")
        return link


# Evaluation-setup constants (one MEC, two CC nodes).
DEFAULT_MEC_FREQUENCY = 10e9
DEFAULT_CC_FREQUENCY = 100e9
DEFAULT_CC_DISTANCES = (1000.0, 10000.0)
DEFAULT_BANDWIDTH = 20e6
DEFAULT_TX_POWER = 0.5
DEFAULT_NOISE_POWER = 1e-13
DEFAULT_PATH_LOSS_EXPONENT = 4.0
# Not given by the source model; chosen so the CC tier is slightly costlier per cycle.
DEFAULT_MEC_ENERGY_COEFF = 1.0e-10
DEFAULT_CC_ENERGY_COEFF = 1.2e-10


def default_topology(
    mec_frequency: float = DEFAULT_MEC_FREQUENCY,
    *,
    cc_frequency: float = DEFAULT_CC_FREQUENCY,
    cc_distances: Sequence[float] = DEFAULT_CC_DISTANCES,
    mec_energy_coeff: float = DEFAULT_MEC_ENERGY_COEFF,
    cc_energy_coeff: float = DEFAULT_CC_ENERGY_COEFF,
    bandwidth: float = DEFAULT_BANDWIDTH,
    tx_power: float = DEFAULT_TX_POWER,
    noise_power: float = DEFAULT_NOISE_POWER,
    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT,
) -> Topology:
    """One MEC (node 0) and one CC node per entry of ``cc_distances``."""
    if not mec_frequency > 0:
        raise InvalidArgument("MEC frequency must be positive")
    nodes = [Node(0, NodeKind.MEC, float(mec_frequency), float(mec_energy_coeff), 0.0)]
    links = []
    for i, dist in enumerate(cc_distances, start=1):
        nodes.append(Node(i, NodeKind.CC, float(cc_frequency), float(cc_energy_coeff), float(dist)))
        links.append(Link.from_distance((0, i), dist, bandwidth, tx_power, noise_power,
                                        path_loss_exponent))
    return Topology(tuple(nodes), tuple(links))


def _normalize_mix(app_mix) -> tuple[list[AppClass], np.ndarray]:
    if app_mix is None:
        classes = list(APP_CLASSES)
        weights = np.ones(len(classes))
    else:
        items = app_mix.items() if isinstance(app_mix, Mapping) else [(c, 1.0) for c in app_mix]
        classes, weights = [], []
        for key, w in items:
            cls = key if isinstance(key, AppClass) else AppClass[str(key)]
            classes.append(cls)
            weights.append(float(w))
        weights = np.asarray(weights, dtype=float)
    if len(classes) == 0 or np.any(weights < 0) or not weights.sum() > 0:
        raise InvalidArgument("application mix must have non-negative weights with positive sum")
    return classes, weights / weights.sum()


def generate_tasks(
    count: int,
    data_size_range: tuple[float, float],
    deadline_range: tuple[float, float],
    app_mix=None,
    rng_seed=None,
    *,
    rng: np.random.Generator | None = None,
    first_id: int = 0,
) -> list[Task]:
    """Draw ``count`` tasks with uniform sizes (bits, rounded to whole bytes) and deadlines.

    ``app_mix`` is ``None`` (uniform over A..G), a mapping label -> weight, or a
    sequence of labels. Pass either ``rng_seed`` or an explicit generator.
    """
    if count < 1:
        raise InvalidArgument(f"task count must be >= 1, got {count}")
    lo_bits, hi_bits = (float(x) for x in data_size_range)
    lo_t, hi_t = (float(x) for x in deadline_range)
    lo_bytes = math.ceil(lo_bits / BITS_PER_BYTE)
    hi_bytes = math.floor(hi_bits / BITS_PER_BYTE)
    if lo_bytes < 1 or hi_bytes < lo_bytes:
        raise InvalidArgument(f"empty data size range {data_size_range}")
    if not (0 < lo_t <= hi_t):
        raise InvalidArgument(f"empty deadline range {deadline_range}")
    classes, probs = _normalize_mix(app_mix)
    if rng is None:
        rng = np.random.default_rng(rng_seed)

    sizes = rng.integers(lo_bytes, hi_bytes, size=count, endpoint=True) * BITS_PER_BYTE
    deadlines = rng.uniform(lo_t, hi_t, size=count) if hi_t > lo_t else np.full(count, lo_t)
    picks = rng.choice(len(classes), size=count, p=probs)
    return [Task.make(first_id + i, int(sizes[i]), float(deadlines[i]), classes[picks[i]])
            for i in range(count)]
