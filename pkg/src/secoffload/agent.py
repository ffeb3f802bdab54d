"""Action-constrained deep Q-learning.

The constraint function adds ``-lam`` to every action whose projected
completion delay exceeds the deadline. It is applied both when acting greedily
and inside the bootstrap target, so the learnt values describe the
constrained policy rather than being a penalty folded into the reward.

Replay is uniform or prioritized (``P(i) = p_i^alpha / sum p^alpha`` with
``p_i = |delta_i| + eps``); the target network is synced by hard copy every
``target_period`` episodes or blended softly after every gradient step.

The DQN+NN variant trains an extra feedforward network ``c(s, a)`` that
predicts the (normalised) per-task cost by plain regression on replayed
transitions. While acting, the score ``Q - kappa * c`` is maximised, where
``kappa`` shrinks with the exploration rate: the cost predictor shapes early
preferences and later only separates near-ties in Q.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .env import OffloadingEnv, RewardNormalizer
from .errors import InvalidArgument
from .neuralnet import QNetwork, apply_update, clip_gradients, clone_parameters, make_optimizer, \
    soft_update


# -- constraint ------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintFn:
    """``f(a) = -lam`` if the projected delay of ``a`` exceeds ``t_max``, else 0.

    ``t_max=None`` means "the current task's deadline".
    """

    lam: float = 1000.0
    t_max: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {self.lam}")
        if self.t_max is not None and not self.t_max > 0:
            raise InvalidArgument(f"t_max must be positive, got {self.t_max}")

    def bound(self, deadline):
        return deadline if self.t_max is None else self.t_max

    def value(self, delay: float, deadline: float | None = None) -> float:
        return -self.lam if delay > self.bound(deadline) else 0.0

    def vector(self, delays, deadline=None) -> np.ndarray:
        """Constraint values for an array of delays (a row per state if 2-D)."""
        delays = np.asarray(delays, dtype=np.float64)
        bound = self.bound(deadline)
        if np.ndim(bound) == 1 and delays.ndim == 2:
            bound = np.asarray(bound)[:, None]
        return np.where(delays > bound, -self.lam, 0.0)


def constraint_value(action: int, env: OffloadingEnv, fn: ConstraintFn) -> float:
    """Constraint of placing the environment's current task on node ``action``."""
    if not 0 <= action < env.n_actions:
        raise InvalidArgument(f"action {action} outside 0..{env.n_actions - 1}")
    return fn.value(float(env.projected_delays()[action]), env.current_task.deadline)


def constraint_vector(env: OffloadingEnv, fn: ConstraintFn | None) -> np.ndarray:
    if fn is None:
        return np.zeros(env.n_actions)
    return fn.vector(env.projected_delays(), env.current_task.deadline)


# -- exploration -------------------------------------------------------------

@dataclass(frozen=True)
class ExplorationSchedule:
    epsilon0: float = 1.0
    decay: float = 0.995
    epsilon_min: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise InvalidArgument("decay must lie in (0, 1)")
        if not 0.0 <= self.epsilon_min <= self.epsilon0 <= 1.0:
            raise InvalidArgument("need 0 <= epsilon_min <= epsilon0 <= 1")


def epsilon_at(schedule: ExplorationSchedule, t: int) -> float:
    if t < 0:
        raise InvalidArgument("t must be non-negative")
    return max(schedule.epsilon_min, schedule.epsilon0 * schedule.decay ** t)


def select_action(q_values, constraints, epsilon: float, rng: np.random.Generator, *,
                  masked: bool = False) -> int:
    """Epsilon-greedy over ``Q + constraints``; ties go to the lowest index.

    Exploration is uniform over all actions unless ``masked``, in which case it
    draws only among unconstrained actions (falling back to all if none are).
    """
    q = np.asarray(q_values, dtype=np.float64)
    c = np.asarray(constraints, dtype=np.float64)
    if q.size == 0:
        raise InvalidArgument("empty action set")
    if q.shape != c.shape:
        raise InvalidArgument("q_values and constraints differ in length")
    if epsilon > 0.0 and rng.random() < epsilon:
        if masked:
            free = np.flatnonzero(c == 0.0)
            if free.size:
                return int(free[rng.integers(free.size)])
        return int(rng.integers(q.size))
    return int(np.argmax(q + c))


# -- replay ------------------------------------------------------------------

@dataclass
class Transition:
    """One experience. ``next_delays``/``next_deadline`` describe the next task so
    the constraint can be evaluated in the next state at target time."""

    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool
    next_delays: np.ndarray | None = None
    next_deadline: float = np.inf
    priority: float = 1.0


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions stored column-wise in numpy arrays."""

    def __init__(self, capacity: int, state_dim: int, n_actions: int, *,
                 prioritized: bool = False, alpha: float = 0.6, eps: float = 1e-3):
        if capacity < 1:
            raise InvalidArgument("capacity must be positive")
        if alpha < 0 or eps <= 0:
            raise InvalidArgument("need alpha >= 0 and eps > 0")
        self.capacity = int(capacity)
        self.prioritized = prioritized
        self.alpha = float(alpha)
        self.eps = float(eps)
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity, dtype=bool)
        self.next_delays = np.zeros((capacity, n_actions))
        self.next_deadlines = np.full(capacity, np.inf)
        self.priorities = np.zeros(capacity)
        self.max_priority = 1.0
        self._pos = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, t: Transition, priority: float | None = None) -> int:
        i = self._pos
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.dones[i] = t.done
        if t.next_delays is None:
            self.next_delays[i] = 0.0
            self.next_deadlines[i] = np.inf
        else:
            self.next_delays[i] = t.next_delays
            self.next_deadlines[i] = t.next_deadline
        # fresh experience gets the largest priority seen so far
        self.priorities[i] = self.max_priority if priority is None else priority
        self.max_priority = max(self.max_priority, self.priorities[i])
        self._pos = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        return i

    def order(self) -> np.ndarray:
        """Slot indices from oldest to newest."""
        if self._size < self.capacity:
            return np.arange(self._size)
        return (np.arange(self.capacity) + self._pos) % self.capacity

    def get(self, i: int) -> Transition:
        return Transition(self.states[i].copy(), int(self.actions[i]), float(self.rewards[i]),
                          self.next_states[i].copy(), bool(self.dones[i]),
                          self.next_delays[i].copy(), float(self.next_deadlines[i]),
                          float(self.priorities[i]))

    def transitions(self) -> list[Transition]:
        return [self.get(i) for i in self.order()]

    def probabilities(self) -> np.ndarray:
        n = self._size
        if not self.prioritized:
            return np.full(n, 1.0 / n)
        w = self.priorities[:n] ** self.alpha
        return w / w.sum()

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size < 1:
            raise InvalidArgument("batch_size must be positive")
        if self._size < batch_size:
            raise InvalidArgument(f"buffer holds {self._size} transitions, need {batch_size}")
        if not self.prioritized:
            return rng.integers(0, self._size, size=batch_size)
        cdf = np.cumsum(self.priorities[:self._size] ** self.alpha)
        idx = np.searchsorted(cdf, rng.random(batch_size) * cdf[-1], side="right")
        return np.minimum(idx, self._size - 1)

    def importance_weights(self, idx, beta: float) -> np.ndarray:
        p = self.probabilities()
        w = (self._size * p[idx]) ** -beta
        return w / w.max()

    def update_priorities(self, idx, td_errors) -> None:
        p = np.abs(np.asarray(td_errors, dtype=np.float64)) + self.eps
        self.priorities[idx] = p
        self.max_priority = max(self.max_priority, float(p.max()))


def sample_batch(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> list[Transition]:
    return [buffer.get(int(i)) for i in buffer.sample_indices(batch_size, rng)]


# -- targets -----------------------------------------------------------------

def td_targets(rewards, dones, next_q, next_constraints, gamma: float) -> np.ndarray:
    """``y = r`` for terminal transitions, else ``r + gamma * max_a'(Q'(s', a') + f(a'))``."""
    best = np.max(np.asarray(next_q) + np.asarray(next_constraints), axis=1)
    return np.where(dones, rewards, rewards + gamma * best)


def td_target(t: Transition, target_net, constraint_fn: ConstraintFn | None, gamma: float) -> float:
    if t.done:
        return float(t.reward)
    q = np.asarray(target_net(t.next_state), dtype=np.float64)
    if constraint_fn is None or t.next_delays is None:
        c = np.zeros_like(q)
    else:
        c = constraint_fn.vector(t.next_delays, t.next_deadline)
    return float(t.reward + gamma * np.max(q + c))


# -- configuration -------------------------------------------------------------

TARGET_MODES = ("hard", "soft")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.95
    batch_size: int = 64
    buffer_capacity: int = 10_000
    learn_start: int | None = None  # defaults to batch_size
    lr: float = 5e-4
    optimizer: str = "adam"
    hidden: tuple = (64, 64, 32)
    activation: str = "relu"
    init: str = "uniform"
    dueling: bool = False
    prioritized: bool = False
    per_alpha: float = 0.6
    per_eps: float = 1e-3
    per_beta: float | None = None  # importance-sampling correction, off by default
    use_constraint: bool = True
    lam: float = 1000.0
    t_max: float | None = None
    masked_exploration: bool = False
    schedule: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    epsilon_per: str = "episode"
    target_update: str = "hard"
    target_period: int = 10
    soft_tau: float = 0.01
    grad_clip: float | None = None
    normalize_rewards: bool = True
    cost_net: bool = False
    cost_kappa0: float = 1.0
    cost_kappa_min: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidArgument("gamma must lie in [0, 1)")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise InvalidArgument("need 1 <= batch_size <= buffer_capacity")
        if self.target_update not in TARGET_MODES:
            raise InvalidArgument(f"target_update must be one of {TARGET_MODES}")
        if self.target_period < 1:
            raise InvalidArgument("target_period must be positive")
        if not 0.0 < self.soft_tau <= 1.0:
            raise InvalidArgument("soft_tau must lie in (0, 1]")
        if self.epsilon_per not in ("episode", "step"):
            raise InvalidArgument("epsilon_per must be 'episode' or 'step'")
        if self.lr <= 0:
            raise InvalidArgument("lr must be positive")

    def with_(self, **changes) -> "AgentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def agent_config_from_dict(data: dict, base: AgentConfig | None = None) -> AgentConfig:
    base = base or AgentConfig()
    data = dict(data)
    if "schedule" in data:
        data["schedule"] = ExplorationSchedule(**data["schedule"])
    if "hidden" in data:
        data["hidden"] = tuple(data["hidden"])
    unknown = set(data) - set(base.to_dict())
    if unknown:
        raise InvalidArgument(f"unknown agent settings: {sorted(unknown)}")
    return replace(base, **data)


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    reward: float  # raw units
    system_cost: float
    total_delay: float
    total_energy: float
    violations: int
    epsilon: float
    mean_td_loss: float
    offloading_rate: float


# -- agent -------------------------------------------------------------------

class Agent:
    def __init__(self, env: OffloadingEnv, config: AgentConfig = AgentConfig(),
                 normalizer: RewardNormalizer | None = None):
        self.env = env
        self.config = config
        cfg = config
        seeds = np.random.SeedSequence(cfg.seed).spawn(5)
        self.net = QNetwork(env.state_dim, env.n_actions, cfg.hidden, dueling=cfg.dueling,
                            activation=cfg.activation, init=cfg.init, seed=seeds[0])
        self.target = clone_parameters(self.net)
        self.optimizer = make_optimizer(cfg.optimizer, cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, env.state_dim, env.n_actions,
                                   prioritized=cfg.prioritized, alpha=cfg.per_alpha, eps=cfg.per_eps)
        self.constraint = ConstraintFn(cfg.lam, cfg.t_max) if cfg.use_constraint else None
        self.explore_rng = np.random.default_rng(seeds[1])
        self.replay_rng = np.random.default_rng(seeds[2])
        self.task_rng = np.random.default_rng(seeds[3])
        self.cost_model = None
        if cfg.cost_net:
            self.cost_model = QNetwork(env.state_dim, env.n_actions, cfg.hidden,
                                       activation=cfg.activation, seed=seeds[4])
            self.cost_optimizer = make_optimizer(cfg.optimizer, cfg.lr)
        if normalizer is None and cfg.normalize_rewards:
            normalizer = RewardNormalizer.fit(env.scenario)
        self.normalizer = normalizer
        self.learn_start = cfg.batch_size if cfg.learn_start is None else max(cfg.learn_start,
                                                                               cfg.batch_size)
        self.episodes_done = 0
        self.steps_done = 0
        self.gradient_steps = 0

    # -- acting ------------------------------------------------------------

    @property
    def epsilon(self) -> float:
        t = self.episodes_done if self.config.epsilon_per == "episode" else self.steps_done
        return epsilon_at(self.config.schedule, t)

    def kappa(self, epsilon: float) -> float:
        cfg = self.config
        return cfg.cost_kappa0 * max(cfg.cost_kappa_min, epsilon / cfg.schedule.epsilon0)

    def scores(self, state, epsilon: float) -> np.ndarray:
        """Values the greedy branch maximises before the constraint is added."""
        q = self.net(state)
        if self.cost_model is not None:
            q = q - self.kappa(epsilon) * self.cost_model(state)
        return q

    def act(self, env: OffloadingEnv, state, epsilon: float | None = None) -> int:
        eps = self.epsilon if epsilon is None else epsilon
        c = constraint_vector(env, self.constraint)
        return select_action(self.scores(state, eps), c, eps, self.explore_rng,
                             masked=self.config.masked_exploration)

    def greedy_action(self, env: OffloadingEnv, state) -> int:
        return self.act(env, state, 0.0)

    # -- learning ----------------------------------------------------------

    def _training_reward(self, outcome) -> float:
        if self.normalizer is None:
            return outcome.reward
        return self.normalizer.reward(outcome.breakdown)

    def learn(self) -> float:
        """One gradient step on a replayed batch; returns the batch loss."""
        cfg, buf = self.config, self.buffer
        idx = buf.sample_indices(cfg.batch_size, self.replay_rng)
        next_q = self.target(buf.next_states[idx])
        if self.constraint is None:
            c = np.zeros_like(next_q)
        else:
            c = self.constraint.vector(buf.next_delays[idx], buf.next_deadlines[idx])
        y = td_targets(buf.rewards[idx], buf.dones[idx], next_q, c, cfg.gamma)
        weights = buf.importance_weights(idx, cfg.per_beta) \
            if cfg.prioritized and cfg.per_beta is not None else None
        loss, grads, td = self.net.loss_and_grads(buf.states[idx], buf.actions[idx], y, weights)
        if cfg.grad_clip is not None:
            clip_gradients(grads, cfg.grad_clip)
        apply_update(self.net, grads, self.optimizer)
        if cfg.prioritized:
            buf.update_priorities(idx, td)
        if self.cost_model is not None:
            _, cgrads, _ = self.cost_model.loss_and_grads(buf.states[idx], buf.actions[idx],
                                                          -buf.rewards[idx])
            if cfg.grad_clip is not None:
                clip_gradients(cgrads, cfg.grad_clip)
            apply_update(self.cost_model, cgrads, self.cost_optimizer)
        if cfg.target_update == "soft":
            soft_update(self.target, self.net, cfg.soft_tau)
        self.gradient_steps += 1
        return loss

    def run_episode(self, seed=None) -> EpisodeMetrics:
        """Play one training episode, learning online after every step."""
        env = self.env
        if seed is None:
            seed = int(self.task_rng.integers(2 ** 63))
        state = env.reset(seed)
        eps = self.epsilon
        losses = []
        delay = energy = cost = reward = 0.0
        violations = offloaded = steps = 0
        while not env.done:
            if self.config.epsilon_per == "step":
                eps = self.epsilon
            action = self.act(env, state, eps)
            out = env.step(action)
            if out.done:
                nd, ndl = None, np.inf
            else:
                nd, ndl = env.projected_delays(), env.current_task.deadline
            self.buffer.add(Transition(state, action, self._training_reward(out), out.next_state,
                                       out.done, nd, ndl))
            self.steps_done += 1
            if len(self.buffer) >= self.learn_start:
                losses.append(self.learn())
            b = out.breakdown
            delay += b.delay
            energy += b.energy
            cost += b.cost(env.weights)
            reward += out.reward
            violations += out.violated_deadline
            offloaded += out.offloaded
            steps += 1
            state = out.next_state
        self.episodes_done += 1
        if self.config.target_update == "hard" and self.episodes_done % self.config.target_period == 0:
            clone_parameters(self.net, self.target)
        return EpisodeMetrics(self.episodes_done - 1, reward, cost, delay, energy, violations, eps,
                              float(np.mean(losses)) if losses else float("nan"),
                              offloaded / steps)

    def train(self, episodes: int) -> list[EpisodeMetrics]:
        if episodes < 1:
            raise InvalidArgument("episodes must be positive")
        return [self.run_episode() for _ in range(episodes)]


def train(env: OffloadingEnv, config: AgentConfig = AgentConfig(), episodes: int = 300):
    """Train from scratch; returns ``(q_network, per-episode metrics)``."""
    agent = Agent(env, config)
    metrics = agent.train(episodes)
    return agent.net, metrics
