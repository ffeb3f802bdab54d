import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secoffload.errors import InvalidArgument
from secoffload.topology import (APP_CLASSES, AppClass, Link, Node, NodeKind, Task, Topology,
                                 cycles_for, default_topology, generate_tasks)

GB = 8 * 10 ** 9


def test_table_of_cycles_per_byte():
    expected = {"A": 330, "B": 500, "C": 960, "D": 1900, "E": 5900, "F": 8900, "G": 12000}
    assert {c.label: c.cycles_per_byte for c in APP_CLASSES} == expected
    assert len({c.cycles_per_byte for c in APP_CLASSES}) == len(APP_CLASSES)


def test_cycles_for_examples():
    assert cycles_for(8000, AppClass.A) == 330_000
    assert cycles_for(8, AppClass.B) == 500
    # 1000 bytes at 12000 cycles/byte
    assert cycles_for(8000, AppClass.G) == 1000 * 12000


@pytest.mark.parametrize("bad", [0, -8, 12, 8.5, True, "8", float("nan")])
def test_cycles_for_rejects_bad_sizes(bad):
    with pytest.raises(InvalidArgument):
        cycles_for(bad, AppClass.A)


@given(st.integers(1, 10 ** 9), st.integers(1, 10 ** 6), st.sampled_from(APP_CLASSES))
def test_cycles_for_is_linear(a, b, cls):
    assert cycles_for(8 * (a + b), cls) == cycles_for(8 * a, cls) + cycles_for(8 * b, cls)


def test_task_invariants():
    t = Task.make(3, 16, 0.5, AppClass.C)
    assert t.cpu_cycles == 2 * 960 and t.data_bytes == 2
    with pytest.raises(InvalidArgument):
        Task(0, 16, 999, 0.5, AppClass.C)
    with pytest.raises(InvalidArgument):
        Task.make(0, 16, 0.0, AppClass.C)


def test_generate_tasks_is_deterministic():
    a = generate_tasks(3, (8e6, 40e6), (1.5, 1.7), rng_seed=42)
    b = generate_tasks(3, (8e6, 40e6), (1.5, 1.7), rng_seed=42)
    assert a == b
    assert a != generate_tasks(3, (8e6, 40e6), (1.5, 1.7), rng_seed=43)


def test_generate_tasks_gb_range_deadlines():
    tasks = generate_tasks(1000, (1 * GB, 5 * GB), (0.7, 0.8), rng_seed=0)
    assert all(0.7 <= t.deadline <= 0.8 for t in tasks)
    assert all(1 * GB <= t.data_size <= 5 * GB for t in tasks)


def test_generate_tasks_cycles_match_table():
    for t in generate_tasks(200, (8, 8e6), (0.1, 1.0), rng_seed=7):
        assert t.cpu_cycles == cycles_for(t.data_size, t.app_class)
        assert t.data_size % 8 == 0


def test_generate_tasks_app_mix():
    tasks = generate_tasks(50, (8, 800), (1, 2), {"B": 1.0}, rng_seed=1)
    assert {t.app_class for t in tasks} == {AppClass.B}
    tasks = generate_tasks(2000, (8, 800), (1, 2), ["A", "G"], rng_seed=1)
    share = np.mean([t.app_class is AppClass.A for t in tasks])
    assert abs(share - 0.5) < 3 * math.sqrt(0.25 / 2000)


@pytest.mark.parametrize("sizes,deadlines", [((80, 8), (1, 2)), ((1, 7), (1, 2)),
                                             ((8, 80), (2, 1)), ((8, 80), (0, 1))])
def test_generate_tasks_rejects_empty_ranges(sizes, deadlines):
    with pytest.raises(InvalidArgument):
        generate_tasks(3, sizes, deadlines, rng_seed=0)


def test_generate_tasks_rejects_zero_count():
    with pytest.raises(InvalidArgument):
        generate_tasks(0, (8, 80), (1, 2), rng_seed=0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(1, 10 ** 6), st.integers(0, 10 ** 6),
       st.floats(0.01, 5), st.floats(0, 5), st.integers(0, 2 ** 32))
def test_generated_tasks_respect_ranges(count, lo_bytes, extra, dl_lo, dl_extra, seed):
    lo, hi = 8 * lo_bytes, 8 * (lo_bytes + extra)
    tasks = generate_tasks(count, (lo, hi), (dl_lo, dl_lo + dl_extra), rng_seed=seed)
    assert len(tasks) == count
    assert len({t.id for t in tasks}) == count
    for t in tasks:
        assert lo <= t.data_size <= hi
        assert dl_lo <= t.deadline <= dl_lo + dl_extra
        assert t.cpu_cycles == t.data_bytes * t.app_class.cycles_per_byte


def test_default_topology():
    topo = default_topology(10e9)
    assert len(topo.nodes) == 3 and len(topo.links) == 2
    assert topo.mec.frequency == 10e9 and topo.mec.distance_from_mec == 0
    assert {n.distance_from_mec for n in topo.nodes if n.kind is NodeKind.CC} == {1000.0, 10000.0}
    assert all(n.frequency == 100e9 for n in topo.nodes if n.kind is NodeKind.CC)
    for link in topo.links:
        assert link.bandwidth == 20e6
        assert link.noise_power == 1e-13
        assert link.tx_power == 0.5
        assert link.path_loss_exponent == 4.0
    near = topo.link_between(0, 1)
    assert near.channel_gain == pytest.approx(1000.0 ** -4, rel=1e-15)


def test_default_topology_passthrough():
    a, b = default_topology(10e9), default_topology(5e9)
    assert b.mec.frequency == 5e9
    assert a.links == b.links
    assert a.nodes[1:] == b.nodes[1:]


def test_topology_validation():
    mec = Node(0, NodeKind.MEC, 1e9, 1e-10, 0.0)
    cc = Node(1, NodeKind.CC, 1e10, 1e-10, 100.0)
    link = Link.from_distance((0, 1), 100.0, 1e6, 0.5, 1e-13, 4.0)
    Topology((mec, cc), (link,))
    with pytest.raises(InvalidArgument):
        Topology((mec, cc), ())
    with pytest.raises(InvalidArgument):
        Topology((mec, Node(1, NodeKind.MEC, 1e9, 1e-10, 0.0)), ())
    with pytest.raises(InvalidArgument):
        Topology((mec, Node(0, NodeKind.CC, 1e9, 1e-10, 5.0)), ())


@pytest.mark.parametrize("kwargs", [dict(frequency=0.0), dict(energy_coeff=-1.0)])
def test_node_validation(kwargs):
    base = dict(id=1, kind=NodeKind.CC, frequency=1e9, energy_coeff=1e-10, distance_from_mec=10.0)
    base.update(kwargs)
    with pytest.raises(InvalidArgument):
        Node(**base)


def test_mec_node_sits_at_zero_distance():
    with pytest.raises(InvalidArgument):
        Node(0, NodeKind.MEC, 1e9, 1e-10, 5.0)


@pytest.mark.parametrize("field,value", [("bandwidth", 0.0), ("noise_power", 0.0),
                                         ("channel_gain", 0.0)])
def test_link_validation(field, value):
    base = dict(endpoints=(0, 1), bandwidth=1e6, channel_gain=1e-12, tx_power=0.5,
                noise_power=1e-13, path_loss_exponent=4.0)
    base[field] = value
    with pytest.raises(InvalidArgument):
        Link(**base)
