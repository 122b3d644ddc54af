"""Desk-scale laboratory for TDDR-family deterministic actor-critic
algorithms: tunable estimation-bias control, SALE-style representation
learning, a tabular convergence oracle, and a seeded experiment harness."""

from .agents import ALGORITHMS, Agent, AgentConfig, evaluate_policy
from .envs import ENV_REGISTRY, make_env, monte_carlo_return
from .runner import ExperimentConfig, load_config, run_experiment

__all__ = [
    "ALGORITHMS",
    "Agent",
    "AgentConfig",
    "ENV_REGISTRY",
    "ExperimentConfig",
    "evaluate_policy",
    "load_config",
    "make_env",
    "monte_carlo_return",
    "run_experiment",
]

__version__ = "0.1.0"
