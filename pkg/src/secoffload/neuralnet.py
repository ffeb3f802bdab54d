"""Fully connected Q-network with hand-written backpropagation.

Layout: ``d -> n1 -> n2 -> n3 -> |A|``. Every hidden layer applies the same
activation. With ``dueling=True`` the last hidden layer feeds a scalar value
head and an ``|A|``-wide advantage head combined as ``V + (A - mean(A))``.

Parameters live in an ordered dict (``W0, b0, W1, b1, W2, b2`` then ``Wq, bq``
or ``Wv, bv, Wa, ba``); gradients use the same keys. Everything is float64.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgument

CHECKPOINT_FORMAT = "secoffload-qnet/1"

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, h: (z > 0.0).astype(z.dtype)),
    "tanh": (np.tanh, lambda z, h: 1.0 - h * h),
}


class QNetwork:
    def __init__(self, input_dim: int, n_actions: int, hidden=(64, 64, 32), *,
                 dueling: bool = False, activation: str = "relu", init: str = "uniform",
                 init_std: float = 0.1, seed=None):
        if activation not in _ACTIVATIONS:
            raise InvalidArgument(f"unknown activation {activation!r}")
        if input_dim < 1 or n_actions < 1 or any(h < 1 for h in hidden):
            raise InvalidArgument("layer sizes must be positive")
        self.input_dim = int(input_dim)
        self.n_actions = int(n_actions)
        self.hidden = tuple(int(h) for h in hidden)
        self.dueling = bool(dueling)
        self.activation = activation
        self._act, self._dact = _ACTIVATIONS[activation]
        self.params: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)

        sizes = (self.input_dim,) + self.hidden
        for i in range(len(self.hidden)):
            self.params[f"W{i}"] = _init_matrix(rng, sizes[i], sizes[i + 1], init, init_std)
            self.params[f"b{i}"] = np.zeros(sizes[i + 1])
        last = sizes[-1]
        if self.dueling:
            self.params["Wv"] = _init_matrix(rng, last, 1, init, init_std)
            self.params["bv"] = np.zeros(1)
            self.params["Wa"] = _init_matrix(rng, last, self.n_actions, init, init_std)
            self.params["ba"] = np.zeros(self.n_actions)
        else:
            self.params["Wq"] = _init_matrix(rng, last, self.n_actions, init, init_std)
            self.params["bq"] = np.zeros(self.n_actions)

    # -- forward -----------------------------------------------------------

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise InvalidArgument(f"expected input of width {self.input_dim}, got shape {x.shape}")
        return x, single

    def _trunk(self, x):
        zs, hs = [], [x]
        h = x
        for i in range(len(self.hidden)):
            z = h @ self.params[f"W{i}"] + self.params[f"b{i}"]
            h = self._act(z)
            zs.append(z)
            hs.append(h)
        return zs, hs

    def _head(self, h):
        p = self.params
        if self.dueling:
            v = h @ p["Wv"] + p["bv"]
            a = h @ p["Wa"] + p["ba"]
            return v + (a - a.mean(axis=1, keepdims=True)), v, a
        return h @ p["Wq"] + p["bq"], None, None

    def forward(self, x) -> np.ndarray:
        """Q-values for one state (1-D in, 1-D out) or a batch (2-D in, 2-D out)."""
        x, single = self._check_input(x)
        _, hs = self._trunk(x)
        q, _, _ = self._head(hs[-1])
        return q[0] if single else q

    __call__ = forward

    def streams(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Raw value and advantage outputs of a dueling network."""
        if not self.dueling:
            raise InvalidArgument("network has no dueling head")
        x, single = self._check_input(x)
        _, hs = self._trunk(x)
        _, v, a = self._head(hs[-1])
        return (v[0], a[0]) if single else (v, a)

    # -- backward ----------------------------------------------------------

    def loss_and_grads(self, states, actions, targets, weights=None):
        """Mean (optionally weighted) squared TD error over a batch, and its gradients.

        Returns ``(loss, grads, td_errors)`` with ``td_errors = targets - Q(s, a)``.
        """
        x, _ = self._check_input(states)
        actions = np.asarray(actions, dtype=np.int64).reshape(-1)
        targets = np.asarray(targets, dtype=np.float64).reshape(-1)
        n = x.shape[0]
        if actions.shape[0] != n or targets.shape[0] != n:
            raise InvalidArgument("states, actions and targets must have the same length")
        if np.any(actions < 0) or np.any(actions >= self.n_actions):
            raise InvalidArgument("action index out of range")
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)

        zs, hs = self._trunk(x)
        q, _, _ = self._head(hs[-1])
        rows = np.arange(n)
        td = targets - q[rows, actions]
        loss = float(np.mean(w * td * td))

        dq = np.zeros_like(q)
        dq[rows, actions] = -2.0 * w * td / n
        return loss, self._backprop(zs, hs, dq), td

    def _backprop(self, zs, hs, dq) -> dict[str, np.ndarray]:
        p = self.params
        grads: dict[str, np.ndarray] = {}
        h = hs[-1]
        if self.dueling:
            da = dq - dq.mean(axis=1, keepdims=True)
            dv = dq.sum(axis=1, keepdims=True)
            grads["Wv"] = h.T @ dv
            grads["bv"] = dv.sum(axis=0)
            grads["Wa"] = h.T @ da
            grads["ba"] = da.sum(axis=0)
            dh = dv @ p["Wv"].T + da @ p["Wa"].T
        else:
            grads["Wq"] = h.T @ dq
            grads["bq"] = dq.sum(axis=0)
            dh = dq @ p["Wq"].T
        for i in reversed(range(len(self.hidden))):
            dz = dh * self._dact(zs[i], hs[i + 1])
            grads[f"W{i}"] = hs[i].T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            if i:
                dh = dz @ p[f"W{i}"].T
        return {k: grads[k] for k in p}

    def backward(self, state, action: int, td_target: float) -> dict[str, np.ndarray]:
        """Gradients of ``(td_target - Q(state, action))**2`` for a single sample."""
        _, grads, _ = self.loss_and_grads(np.asarray(state, dtype=np.float64)[None, :],
                                          [action], [td_target])
        return grads

    # -- misc ----------------------------------------------------------------

    def copy(self) -> "QNetwork":
        twin = object.__new__(QNetwork)
        twin.__dict__.update(self.__dict__)
        twin.params = {k: v.copy() for k, v in self.params.items()}
        return twin

    def architecture(self) -> dict:
        return {"input_dim": self.input_dim, "n_actions": self.n_actions,
                "hidden": list(self.hidden), "dueling": self.dueling,
                "activation": self.activation}

    def n_parameters(self) -> int:
        return sum(v.size for v in self.params.values())


def _init_matrix(rng, fan_in, fan_out, init, std):
    if init == "uniform":
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))
    if init == "gaussian":
        return rng.normal(0.0, std, size=(fan_in, fan_out))
    raise InvalidArgument(f"unknown init scheme {init!r}")


# -- optimisers ----------------------------------------------------------------

class SGD:
    def __init__(self, lr: float = 1e-3):
        self.lr = lr

    def step(self, params, grads):
        for k, g in grads.items():
            params[k] -= self.lr * g


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            params[k] -= lr_t * m / (np.sqrt(v) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "adam":
        return Adam(lr)
    if name == "sgd":
        return SGD(lr)
    raise InvalidArgument(f"unknown optimizer {name!r}")


def apply_update(net: QNetwork, grads: dict[str, np.ndarray], optimizer) -> QNetwork:
    for k, g in grads.items():
        if k not in net.params or net.params[k].shape != g.shape:
            raise InvalidArgument(f"gradient {k!r} does not match the network parameters")
    optimizer.step(net.params, grads)
    return net


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


# -- target network ------------------------------------------------------------

def clone_parameters(source: QNetwork, target: QNetwork | None = None) -> QNetwork:
    """Hard copy: ``target <- source``. Allocates a new network if ``target`` is None."""
    if target is None:
        return source.copy()
    _check_same_shape(target, source)
    for k, v in source.params.items():
        np.copyto(target.params[k], v)
    return target


def soft_update(target: QNetwork, source: QNetwork, tau: float) -> QNetwork:
    """``target <- tau * source + (1 - tau) * target``; ``tau = 1`` is a hard copy."""
    if not 0.0 < tau <= 1.0:
        raise InvalidArgument(f"tau must be in (0, 1], got {tau}")
    _check_same_shape(target, source)
    if tau == 1.0:
        return clone_parameters(source, target)
    for k, v in source.params.items():
        t = target.params[k]
        t *= 1.0 - tau
        t += tau * v
    return target


def _check_same_shape(a: QNetwork, b: QNetwork):
    if a.params.keys() != b.params.keys() or any(
            a.params[k].shape != b.params[k].shape for k in a.params):
        raise InvalidArgument("networks have different parameter layouts")


# -- checkpoints -------------------------------------------------------------

def save_checkpoint(net: QNetwork, path) -> None:
    """Write ``net`` as JSON: architecture plus row-major float lists per parameter."""
    doc = {"format": CHECKPOINT_FORMAT, **net.architecture(),
           "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                      for k, v in net.params.items()}}
    Path(path).write_text(json.dumps(doc, indent=1))


def load_checkpoint(path) -> QNetwork:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise InvalidArgument(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    net = QNetwork(doc["input_dim"], doc["n_actions"], tuple(doc["hidden"]),
                   dueling=doc["dueling"], activation=doc["activation"], seed=0)
    for k, entry in doc["params"].items():
        arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if k not in net.params or net.params[k].shape != arr.shape:
            raise InvalidArgument(f"checkpoint parameter {k!r} does not fit the architecture")
        net.params[k] = arr
    return net
