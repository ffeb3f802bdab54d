import json

import pytest

from secoffload.errors import ConfigError
from secoffload.scenario import DESK, PAPER, load_scenario, preset, scenario_from_dict
from secoffload.topology import AppClass, NodeKind


def test_presets():
    assert preset("desk") is DESK and preset("paper") is PAPER
    assert DESK.tasks.data_size_mb == (1.0, 5.0)
    assert PAPER.tasks.data_size_mb == (1000.0, 5000.0)
    assert PAPER.tasks.deadline_s == (0.7, 0.8)
    with pytest.raises(ConfigError):
        preset("laptop")


def test_round_trip_through_dict():
    assert scenario_from_dict(DESK.to_dict()) == DESK
    assert scenario_from_dict(PAPER.to_dict()) == PAPER


def test_overrides_and_units():
    s = scenario_from_dict({"tasks": {"data_size_gb": [1, 2], "app_mix": {"A": 2, "B": 1}},
                            "topology": {"mec_frequency_hz": 5e9}, "seed": 9})
    assert s.tasks.data_size_mb == (1000.0, 2000.0)
    assert s.tasks.data_size_bits == (8e9, 16e9)
    assert s.tasks.mix == {AppClass.A: 2.0, AppClass.B: 1.0}
    assert s.build_topology().mec.frequency == 5e9
    assert s.seed == 9


def test_explicit_nodes():
    nodes = [{"id": 0, "kind": "MEC", "frequency_hz": 8e9, "energy_j_per_cycle": 1e-10,
              "distance_m": 0},
             {"id": 5, "kind": "CC", "frequency_hz": 5e10, "energy_j_per_cycle": 1e-10,
              "distance_m": 500}]
    topo = scenario_from_dict({"topology": {"nodes": nodes}}).build_topology()
    assert [n.id for n in topo.nodes] == [0, 5]
    assert topo.nodes[1].kind is NodeKind.CC
    assert topo.link_between(0, 5).channel_gain == pytest.approx(500.0 ** -4)


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"tasks": {"count": 0}},
    {"tasks": {"data_size_mb": [5, 1]}},
    {"tasks": {"app_mix": {"Z": 1}}},
    {"weights": {"alpha1": 0.9, "alpha2": 0.9}},
    {"topology": {"mec_frequency_hz": -1}},
    {"episode": {"max_steps": 0}},
    {"preset": "nope"},
    [],
])
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        scenario_from_dict(data)


def test_sweep_helpers():
    assert DESK.with_mec_frequency(5e9).build_topology().mec.frequency == 5e9
    assert DESK.with_task_count(7).tasks.count == 7
    lo, hi = DESK.with_mean_data_size(3).tasks.data_size_mb
    assert (lo, hi) == pytest.approx((1.0, 5.0))


def test_load_from_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"preset": "paper", "tasks": {"count": 12}}))
    s = load_scenario(p)
    assert s.name == "paper" and s.tasks.count == 12
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "bad.json")
