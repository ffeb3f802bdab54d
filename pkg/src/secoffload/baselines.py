"""Comparison policies behind one interface.

A policy is anything with ``name``, ``learns`` and ``act(env, state) -> int``.
The fixed rules (LC, CO, RC) ignore the state; the learned ones wrap a trained
:class:`~secoffload.agent.Agent` and act greedily. DQN, DQN+NN and SARMTO share
the same agent code and differ only in the feature switches returned by
:func:`agent_config_for`:

========  ==========  ==========  =======  =========
policy    constraint  replay      dueling  cost net
========  ==========  ==========  =======  =========
DQN       off         uniform     no       no
DQN+NN    off         uniform     no       yes
SARMTO    on          prioritized yes      no
========  ==========  ==========  =======  =========
"""

from __future__ import annotations

import numpy as np

from .agent import Agent, AgentConfig
from .env import OffloadingEnv
from .errors import ConfigError

POLICY_NAMES = ("LC", "CO", "RC", "DQN", "DQN+NN", "SARMTO")
LEARNED = ("DQN", "DQN+NN", "SARMTO")


def lc_policy(env: OffloadingEnv) -> int:
    return env.mec_index


def co_policy(env: OffloadingEnv, rng: np.random.Generator) -> int:
    cc = env.topology.cc_indices
    return int(cc[rng.integers(len(cc))])


def rc_policy(env: OffloadingEnv, rng: np.random.Generator) -> int:
    return int(rng.integers(env.n_actions))


class FixedPolicy:
    learns = False

    def __init__(self, name: str, seed=None):
        self.name = name
        self.rng = np.random.default_rng(seed)

    def act(self, env: OffloadingEnv, state=None) -> int:
        if self.name == "LC":
            return lc_policy(env)
        if self.name == "CO":
            return co_policy(env, self.rng)
        return rc_policy(env, self.rng)


class LearnedPolicy:
    learns = True

    def __init__(self, name: str, agent: Agent):
        self.name = name
        self.agent = agent

    def act(self, env: OffloadingEnv, state) -> int:
        return self.agent.greedy_action(env, state)


def agent_config_for(name: str, base: AgentConfig | None = None) -> AgentConfig:
    base = base or AgentConfig()
    if name == "DQN":
        return base.with_(use_constraint=False, prioritized=False, dueling=False, cost_net=False)
    if name == "DQN+NN":
        return base.with_(use_constraint=False, prioritized=False, dueling=False, cost_net=True)
    if name == "SARMTO":
        return base.with_(use_constraint=True, prioritized=True, dueling=True, cost_net=False)
    raise ConfigError(f"{name!r} is not a learned policy; choose from {LEARNED}")


def normalize_name(name: str) -> str:
    key = name.strip().upper().replace("_", "+").replace("-", "+")
    if key in ("DQNNN", "DQN+NN"):
        key = "DQN+NN"
    if key in ("AC+DQN", "ACDQN"):
        key = "SARMTO"
    if key not in POLICY_NAMES:
        raise ConfigError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
    return key


def build_policy(name: str, env: OffloadingEnv, *, seed=0, base: AgentConfig | None = None,
                 episodes: int = 300):
    """Construct a policy; learned ones are trained on ``env`` first.

    Returns ``(policy, training_metrics)``; metrics are empty for fixed rules.
    """
    name = normalize_name(name)
    if name not in LEARNED:
        return FixedPolicy(name, seed), []
    agent = Agent(env, agent_config_for(name, base).with_(seed=seed))
    metrics = agent.train(episodes)
    return LearnedPolicy(name, agent), metrics
