import json

import numpy as np
import pytest

from secoffload.agent import AgentConfig
from secoffload.errors import ConfigError
from secoffload.harness import (ROW_FIELDS, MetricsRow, Sweep, apply_axis, evaluate, export,
                                load_rows, parse_csv, parse_json, run_sweep, summarize,
                                sweep_from_dict, to_csv)
from secoffload.baselines import FixedPolicy
from secoffload.scenario import DESK

TINY_AGENT = AgentConfig(batch_size=8, hidden=(8,))


def row(policy="LC", value=1.0, rep=0, cost=1.0, **kw):
    base = dict(policy=policy, axis="task_count", axis_value=value, repetition=rep, seed=rep,
                system_cost=cost, avg_delay=0.1, total_energy=2.0, energy_efficiency=0.5,
                offloading_rate=0.0, deadline_violations=0.0)
    base.update(kw)
    return MetricsRow(**base)


def test_axis_application():
    assert apply_axis(DESK, "task_count", 200).tasks.count == 200
    assert apply_axis(DESK, "mec_capacity", 5).build_topology().mec.frequency == 5e9
    assert apply_axis(DESK, "data_size", 3).tasks.data_size_mb == pytest.approx((1.0, 5.0))
    with pytest.raises(ConfigError):
        apply_axis(DESK, "task_count", 2.5)
    with pytest.raises(ConfigError):
        apply_axis(DESK, "bandwidth", 1)


@pytest.mark.parametrize("kw", [dict(axis="x", values=(1,)), dict(axis="task_count", values=()),
                                dict(axis="task_count", values=(1,), repetitions=0),
                                dict(axis="task_count", values=(1,), policies=("greedy",))])
def test_sweep_validation(kw):
    with pytest.raises(ConfigError):
        Sweep(**kw)


def test_cell_count():
    sweep = Sweep("task_count", (200, 400, 600, 800, 1000))
    assert len(list(sweep.cells())) == 90


def test_lc_evaluation_never_offloads():
    m = evaluate(FixedPolicy("LC"), DESK.with_task_count(50), [1, 2])
    assert m["offloading_rate"] == 0.0
    assert m["system_cost"] > 0 and m["total_energy"] > 0


def test_evaluation_metric_definitions():
    scen = DESK.with_task_count(40)
    m = evaluate(FixedPolicy("RC", seed=1), scen, [3])
    from secoffload.env import OffloadingEnv
    env = OffloadingEnv(scen, max_steps=None)
    s = env.reset(3)
    pol = FixedPolicy("RC", seed=1)
    delay = energy = 0.0
    ok = off = 0
    while not env.done:
        out = env.step(pol.act(env, s))
        delay += out.breakdown.delay
        energy += out.breakdown.energy
        ok += not out.violated_deadline
        off += out.offloaded
        s = out.next_state
    assert m["system_cost"] == pytest.approx(0.5 * delay + 0.5 * energy, rel=1e-12)
    assert m["avg_delay"] == pytest.approx(delay / 40, rel=1e-12)
    assert m["energy_efficiency"] == pytest.approx(ok / energy, rel=1e-12)
    assert m["offloading_rate"] == off / 40
    assert m["deadline_violations"] == 40 - ok


def small_sweep(**kw):
    base = dict(axis="task_count", values=(10, 20), policies=("LC", "RC", "SARMTO"), repetitions=2,
                episodes=2, eval_episodes=2, agent=TINY_AGENT)
    base.update(kw)
    return Sweep(**base)


def test_run_sweep_rows_and_determinism(tmp_path):
    sweep = small_sweep()
    rows = run_sweep(sweep, out=tmp_path / "a.csv")
    assert len(rows) == 2 * 3 * 2
    assert [(r.axis_value, r.policy, r.repetition) for r in rows] == \
        [(float(v), p, r) for v, p, r in sweep.cells()]
    assert all(r.offloading_rate == 0 for r in rows if r.policy == "LC")
    run_sweep(sweep, out=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_partial_results_are_flushed(tmp_path, monkeypatch):
    import secoffload.harness as h
    real = h.run_cell
    calls = []

    def flaky(*a, **kw):
        calls.append(1)
        if len(calls) == 3:
            raise RuntimeError("boom")
        return real(*a, **kw)

    monkeypatch.setattr(h, "run_cell", flaky)
    with pytest.raises(RuntimeError):
        run_sweep(small_sweep(policies=("LC",)), out=tmp_path / "p.csv")
    assert len(parse_csv((tmp_path / "p.csv").read_text())) == 2


def test_empty_export_is_header_only(tmp_path):
    path = export([], tmp_path / "e.csv")
    assert path.read_text() == ",".join(ROW_FIELDS) + "\n"


def test_csv_and_json_round_trip(tmp_path):
    rows = [row(cost=1 / 3), row("SARMTO", 2.0, 1, cost=1e-17, offloading_rate=0.25)]
    export(rows, tmp_path / "r.csv")
    export(rows, tmp_path / "r.json", "json")
    assert load_rows(tmp_path / "r.csv") == rows
    assert load_rows(tmp_path / "r.json") == rows
    assert parse_csv(to_csv(rows)) == parse_json((tmp_path / "r.json").read_text())
    assert set(json.loads((tmp_path / "r.json").read_text())[0]) == set(ROW_FIELDS)


def test_csv_quoting():
    rows = [row(policy="DQN+NN")]
    assert parse_csv(to_csv(rows)) == rows


def test_summarize():
    (single,) = summarize([row(cost=4.0)])
    assert single.mean["system_cost"] == 4.0 and single.std["system_cost"] == 0.0
    (pair,) = summarize([row(cost=2.0), row(cost=2.0, rep=1)])
    assert pair.std["system_cost"] == 0.0
    (trio,) = summarize([row(cost=1.0), row(cost=2.0, rep=1), row(cost=6.0, rep=2)])
    # mean 3, population variance ((-2)^2 + (-1)^2 + 3^2) / 3 = 14/3
    assert trio.mean["system_cost"] == pytest.approx(3.0)
    assert trio.std["system_cost"] == pytest.approx(np.sqrt(14 / 3))
    assert trio.n == 3


def test_summaries_group_by_policy_and_value():
    groups = summarize([row("LC", 1.0), row("RC", 1.0), row("LC", 2.0), row("LC", 1.0, 1)])
    assert [(g.policy, g.axis_value, g.n) for g in groups] == [("LC", 1.0, 2), ("RC", 1.0, 1),
                                                               ("LC", 2.0, 1)]


def test_sweep_from_dict():
    sweep = sweep_from_dict({"axis": "mec_capacity", "values": [5, 10], "policies": ["lc", "sarmto"],
                             "repetitions": 1, "scenario": {"tasks": {"count": 50}},
                             "agent": {"gamma": 0.9}})
    assert sweep.policies == ("LC", "SARMTO")
    assert sweep.base.tasks.count == 50 and sweep.agent.gamma == 0.9
    for bad in ({"axis": "task_count"}, {"axis": "task_count", "values": 3},
                {"axis": "task_count", "values": [1], "extra": 1},
                {"axis": "task_count", "values": [1], "agent": {"nope": 1}}):
        with pytest.raises(ConfigError):
            sweep_from_dict(bad)
