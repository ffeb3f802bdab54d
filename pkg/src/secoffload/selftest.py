"""Quick in-process property checks, runnable from the CLI as ``secoffload selftest``.

Each check returns ``(ok, detail)``; none takes more than a few seconds.
"""

from __future__ import annotations

import random
from typing import Callable

import numpy as np

from .agent import ConstraintFn, ExplorationSchedule, ReplayBuffer, Transition, epsilon_at, \
    select_action, td_targets
from .costmodel import Assignment, brute_force_optimum, system_cost, task_cost
from .env import OffloadingEnv
from .neuralnet import QNetwork, soft_update
from .scenario import DESK
from .security import keygen, open_envelope, seal


def finite_difference_gap(net: QNetwork, x, a: int, y: float, h: float = 1e-5) -> float:
    """Largest relative error between analytic and central-difference gradients."""
    grads = net.backward(x, a, y)
    worst = 0.0
    for k, p in net.params.items():
        flat = p.reshape(-1)
        g = grads[k].reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = (y - net(x)[a]) ** 2
            flat[i] = old - h
            down = (y - net(x)[a]) ** 2
            flat[i] = old
            num = (up - down) / (2 * h)
            worst = max(worst, abs(num - g[i]) / max(1.0, abs(num) + abs(g[i])))
    return worst


def check_gradients():
    rng = np.random.default_rng(1)
    worst = 0.0
    for dueling in (False, True):
        net = QNetwork(5, 3, (6, 5, 4), dueling=dueling, activation="tanh", seed=int(rng.integers(1e9)))
        worst = max(worst, finite_difference_gap(net, rng.normal(size=5), 1, 0.3))
    return worst < 1e-4, f"max relative error {worst:.2e}"


def check_dueling():
    net = QNetwork(6, 4, dueling=True, seed=3)
    x = np.random.default_rng(0).random((200, 6))
    v, _ = net.streams(x)
    gap = float(np.abs((net(x) - v).mean(axis=1)).max())
    return gap < 1e-12, f"max |mean(Q - V)| {gap:.1e}"


def check_constraint():
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(2000):
        q = rng.uniform(-100, 100, 3)
        c = np.where(rng.random(3) < 0.5, -1000.0, 0.0)
        if (c == 0).any() and c[select_action(q, c, 0.0, rng)] != 0:
            bad += 1
    return bad == 0, f"{bad} constrained picks"


def check_targets():
    y = td_targets(np.array([-1.0]), np.array([False]), np.array([[1.0, 2.0]]),
                   ConstraintFn().vector([[0.5, 0.9]], np.array([0.8])), 0.9)
    return abs(y[0] + 0.1) < 1e-12, f"target {float(y[0]):.15g}"


def check_replay():
    buf = ReplayBuffer(2, 1, 1, prioritized=True, alpha=1.0)
    for p in (3.0, 1.0):
        buf.add(Transition(np.zeros(1), 0, 0.0, np.zeros(1), True), priority=p)
    rng = np.random.default_rng(4)
    idx = np.concatenate([buf.sample_indices(2, rng) for _ in range(10000)])
    share = float(np.mean(idx == 0))
    return abs(share - 0.75) < 0.02, f"share of p=3 item {share:.3f}"


def check_schedule():
    s = ExplorationSchedule(1.0, 0.9, 0.05)
    eps = [epsilon_at(s, t) for t in range(2000)]
    ok = abs(eps[2] - 0.81) < 1e-12 and eps[-1] == 0.05 and all(a >= b for a, b in zip(eps, eps[1:]))
    return ok, f"eps(2) = {eps[2]!r}"


def check_soft_update():
    a, b = QNetwork(3, 2, (4,), seed=0), QNetwork(3, 2, (4,), seed=1)
    soft_update(b, a, 1.0)
    same = all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    return same, "tau = 1 copy is exact" if same else "tau = 1 copy differs"


def check_security():
    pk, sk = keygen(512, seed=7)
    rng = random.Random(7)
    for _ in range(5):
        msg = rng.randbytes(rng.randint(1, 200))
        env = seal(msg, pk, rng)
        out, ok = open_envelope(env, sk)
        if not ok or out != msg:
            return False, "round trip failed"
        flipped = bytearray(env.ciphertext)
        flipped[rng.randrange(len(flipped))] ^= 1 << rng.randrange(8)
        if open_envelope(type(env)(bytes(flipped), env.digest), sk)[1]:
            return False, "corruption went unnoticed"
    return True, "round trips verified, corruptions rejected"


def check_cost_oracle():
    scen = DESK.with_task_count(3)
    env = OffloadingEnv(scen, max_steps=None)
    rng = np.random.default_rng(5)
    for _ in range(5):
        env.reset(int(rng.integers(1 << 30)))
        actions = rng.integers(0, env.n_actions, 3)
        reward = sum(env.step(int(a)).reward for a in actions)
        src = env.topology.mec.id
        bds = [task_cost(t, Assignment(t.id, env.topology.nodes[a].id, src), env.topology,
                         env.security) for t, a in zip(env.tasks, actions)]
        if abs(reward + system_cost(bds, env.weights)) > 1e-9 * max(1.0, abs(reward)):
            return False, "episode reward disagrees with the cost model"
        best = brute_force_optimum(env.tasks, env.topology, env.weights, env.security)
        if best.feasible and system_cost(bds, env.weights) < best.cost - 1e-12 and all(
                b.delay <= t.deadline for b, t in zip(bds, env.tasks)):
            return False, "found a feasible assignment cheaper than the optimum"
    return True, "rewards match, optimum not beaten"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "gradient": check_gradients,
    "dueling": check_dueling,
    "constraint": check_constraint,
    "td-target": check_targets,
    "replay": check_replay,
    "schedule": check_schedule,
    "soft-update": check_soft_update,
    "security": check_security,
    "cost-oracle": check_cost_oracle,
}


def run_all(echo=print) -> bool:
    ok_all = True
    for name, check in CHECKS.items():
        try:
            ok, detail = check()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<12} {detail}")
    return ok_all
