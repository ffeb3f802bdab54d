import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secoffload.errors import InvalidArgument
from secoffload.neuralnet import (SGD, Adam, QNetwork, apply_update, clip_gradients,
                                  clone_parameters, load_checkpoint, save_checkpoint, soft_update)


def numeric_gradients(net, x, a, y, h=1e-5):
    """Central differences of (y - Q(x, a))^2 for every parameter."""
    out = {}
    for k, p in net.params.items():
        flat = p.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = (y - net(x)[a]) ** 2
            flat[i] = old - h
            down = (y - net(x)[a]) ** 2
            flat[i] = old
            g[i] = (up - down) / (2 * h)
        out[k] = g.reshape(p.shape)
    return out


def relative_error(a, b, floor=1e-6):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def random_net(rng, **kw):
    """Network with every parameter (biases included) drawn at random, so that no
    ReLU sits exactly on its kink."""
    net = QNetwork(5, 3, (7, 6, 4), **kw)
    for p in net.params.values():
        p[...] = rng.normal(scale=0.7, size=p.shape)
    return net


def zero_net(**kw):
    net = QNetwork(4, 3, (5, 4, 3), **kw)
    for p in net.params.values():
        p[...] = 0.0
    return net


def test_zero_network_outputs_zero():
    assert np.array_equal(zero_net()(np.ones(4)), np.zeros(3))


def test_dueling_with_flat_advantages_is_constant_over_actions():
    net = QNetwork(4, 3, dueling=True, seed=2)
    net.params["Wa"][...] = 0.0
    net.params["ba"][...] = 0.0
    q = net(np.random.default_rng(0).random((10, 4)))
    assert np.all(q == q[:, :1])


def test_forward_is_deterministic():
    x = np.random.default_rng(1).random(7)
    assert np.array_equal(QNetwork(7, 3, seed=5)(x), QNetwork(7, 3, seed=5)(x))
    assert not np.array_equal(QNetwork(7, 3, seed=5)(x), QNetwork(7, 3, seed=6)(x))


def test_forward_shapes_and_errors():
    net = QNetwork(4, 3, seed=0)
    assert net(np.zeros(4)).shape == (3,)
    assert net(np.zeros((6, 4))).shape == (6, 3)
    with pytest.raises(InvalidArgument):
        net(np.zeros(5))
    with pytest.raises(InvalidArgument):
        QNetwork(4, 3, activation="sigmoid")
    with pytest.raises(InvalidArgument):
        QNetwork(4, 3, init="orthogonal")


def test_gaussian_init():
    net = QNetwork(20, 3, (200, 200, 200), init="gaussian", init_std=0.1, seed=0)
    assert abs(net.params["W1"].std() - 0.1) < 0.005


def test_parameter_order():
    assert list(QNetwork(3, 2).params) == ["W0", "b0", "W1", "b1", "W2", "b2", "Wq", "bq"]
    assert list(QNetwork(3, 2, dueling=True).params)[-4:] == ["Wv", "bv", "Wa", "ba"]


def test_gradient_is_zero_at_the_target():
    net = QNetwork(4, 3, dueling=True, seed=3)
    x = np.arange(4.0)
    grads = net.backward(x, 1, float(net(x)[1]))
    assert all(np.all(g == 0) for g in grads.values())


@pytest.mark.parametrize("dueling", [False, True])
@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_gradients_match_finite_differences(dueling, activation):
    rng = np.random.default_rng(10 + dueling + 2 * (activation == "tanh"))
    for _ in range(3):
        net = random_net(rng, dueling=dueling, activation=activation)
        x = rng.normal(size=5)
        a = int(rng.integers(3))
        y = float(rng.normal())
        analytic = net.backward(x, a, y)
        numeric = numeric_gradients(net, x, a, y)
        for k in net.params:
            assert relative_error(analytic[k], numeric[k]).max() < 1e-4, k


def test_unselected_outputs_get_no_gradient():
    net = QNetwork(4, 3, seed=0)
    grads = net.backward(np.ones(4), 2, 5.0)
    assert np.all(grads["Wq"][:, :2] == 0) and np.all(grads["bq"][:2] == 0)
    assert np.any(grads["Wq"][:, 2] != 0)


def test_batch_loss_is_mean_of_samples():
    rng = np.random.default_rng(4)
    net = QNetwork(4, 3, dueling=True, seed=1)
    X, A, Y = rng.random((5, 4)), rng.integers(0, 3, 5), rng.normal(size=5)
    loss, grads, td = net.loss_and_grads(X, A, Y)
    q = net(X)[np.arange(5), A]
    assert loss == pytest.approx(np.mean((Y - q) ** 2), rel=1e-12)
    assert np.allclose(td, Y - q, rtol=0, atol=1e-15)
    singles = [net.backward(X[i], int(A[i]), Y[i]) for i in range(5)]
    for k in grads:
        assert np.allclose(grads[k], np.mean([s[k] for s in singles], axis=0), atol=1e-14)


def test_weighted_loss():
    net = QNetwork(4, 2, seed=1)
    X = np.eye(4)[:2]
    loss_w, _, _ = net.loss_and_grads(X, [0, 1], [1.0, 2.0], weights=[0.0, 2.0])
    q = net(X)
    assert loss_w == pytest.approx((2.0 * (2.0 - q[1, 1]) ** 2) / 2, rel=1e-12)


def test_bad_batches():
    net = QNetwork(4, 2, seed=1)
    with pytest.raises(InvalidArgument):
        net.loss_and_grads(np.zeros((2, 4)), [0], [1.0, 1.0])
    with pytest.raises(InvalidArgument):
        net.loss_and_grads(np.zeros((1, 4)), [2], [1.0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-1e3, 1e3))
def test_dueling_identity(seed, shift):
    net = QNetwork(6, 4, dueling=True, seed=seed)
    x = np.random.default_rng(seed).normal(size=(50, 6))
    q = net(x)
    v, _ = net.streams(x)
    assert np.abs((q - v).mean(axis=1)).max() < 1e-12
    net.params["ba"] += shift
    assert np.abs(net(x) - q).max() < 1e-12 * max(1.0, abs(shift))


def test_zero_gradients_leave_parameters_unchanged():
    for opt in (SGD(0.1), Adam(0.1)):
        net = QNetwork(3, 2, seed=0)
        before = clone_parameters(net)
        apply_update(net, {k: np.zeros_like(v) for k, v in net.params.items()}, opt)
        assert all(np.array_equal(net.params[k], before.params[k]) for k in net.params)


def test_sgd_step_is_exact():
    net = QNetwork(3, 2, seed=0)
    before = {k: v.copy() for k, v in net.params.items()}
    grads = {k: np.full_like(v, 0.25) for k, v in net.params.items()}
    apply_update(net, grads, SGD(0.1))
    for k in net.params:
        assert np.array_equal(net.params[k], before[k] - 0.1 * grads[k])


def test_shape_mismatch_rejected():
    net = QNetwork(3, 2, seed=0)
    with pytest.raises(InvalidArgument):
        apply_update(net, {"W0": np.zeros((2, 2))}, SGD())


def test_quadratic_loss_decreases():
    params = {"w": np.array([3.0])}
    for opt in (SGD(0.1), Adam(0.1)):
        w0 = params["w"].copy()
        opt.step(params, {"w": 2 * params["w"]})
        assert params["w"][0] ** 2 < w0[0] ** 2


def test_network_step_reduces_batch_loss():
    rng = np.random.default_rng(0)
    net = QNetwork(4, 3, seed=2)
    X, A, Y = rng.random((16, 4)), rng.integers(0, 3, 16), rng.normal(size=16)
    loss, grads, _ = net.loss_and_grads(X, A, Y)
    apply_update(net, grads, SGD(1e-3))
    assert net.loss_and_grads(X, A, Y)[0] < loss


def test_gradient_clipping():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_gradients(grads, 1.0) == pytest.approx(5.0)
    assert grads["a"][0] == pytest.approx(0.6) and grads["b"][0] == pytest.approx(0.8)


def test_hard_and_soft_updates():
    src, tgt = QNetwork(3, 2, seed=0), QNetwork(3, 2, seed=1)
    soft_update(tgt, src, 1.0)
    assert all(np.array_equal(tgt.params[k], src.params[k]) for k in src.params)
    copy = clone_parameters(src)
    assert copy is not src and copy.params["W0"] is not src.params["W0"]
    assert np.array_equal(copy(np.ones(3)), src(np.ones(3)))


def test_soft_update_arithmetic():
    src, tgt = zero_net(), zero_net()
    src.params["W0"][...] = 2.0
    soft_update(tgt, src, 0.5)
    assert np.all(tgt.params["W0"] == 1.0)


def test_soft_update_contracts_geometrically():
    src, tgt = QNetwork(3, 2, seed=0), QNetwork(3, 2, seed=1)
    tau = 0.3
    gap = {k: np.abs(tgt.params[k] - src.params[k]) for k in src.params}
    for n in range(1, 6):
        soft_update(tgt, src, tau)
        for k in src.params:
            expect = gap[k] * (1 - tau) ** n
            assert np.allclose(np.abs(tgt.params[k] - src.params[k]), expect, rtol=0, atol=1e-12)


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
def test_soft_update_range(tau):
    with pytest.raises(InvalidArgument):
        soft_update(QNetwork(3, 2), QNetwork(3, 2), tau)


def test_layout_mismatch_rejected():
    with pytest.raises(InvalidArgument):
        soft_update(QNetwork(3, 2), QNetwork(3, 2, dueling=True), 0.5)


def test_checkpoint_round_trip(tmp_path):
    net = QNetwork(5, 3, (6, 4, 2), dueling=True, activation="tanh", seed=9)
    path = tmp_path / "net.json"
    save_checkpoint(net, path)
    back = load_checkpoint(path)
    assert back.architecture() == net.architecture()
    assert all(np.array_equal(back.params[k], net.params[k]) for k in net.params)
    path.write_text('{"format": "other"}')
    with pytest.raises(InvalidArgument):
        load_checkpoint(path)
