"""Simulator and constrained deep Q-learning agent for secure edge/cloud task offloading."""

from .agent import Agent, AgentConfig, ConstraintFn, ExplorationSchedule, ReplayBuffer, train
from .costmodel import CostBreakdown, CostWeights, brute_force_optimum, system_cost, task_cost
from .env import OffloadingEnv, RewardNormalizer
from .neuralnet import QNetwork
from .scenario import DESK, PAPER, Scenario, load_scenario, preset
from .security import SecurityParams
from .topology import AppClass, Task, default_topology, generate_tasks

__version__ = "0.1.0"

__all__ = [
    "DESK", "PAPER", "Agent", "AgentConfig", "AppClass", "ConstraintFn", "CostBreakdown", "CostWeights",
    "ExplorationSchedule", "OffloadingEnv", "QNetwork", "ReplayBuffer", "RewardNormalizer",
    "Scenario", "SecurityParams", "Task", "brute_force_optimum", "default_topology",
    "generate_tasks", "load_scenario", "preset", "system_cost", "task_cost", "train",
]
