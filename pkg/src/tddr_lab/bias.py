"""Estimation-bias probe and upsilon-sweep aggregation.

Bias is the signed difference between the critics' value estimate at an
on-policy state and the Monte Carlo discounted return of the greedy
policy from that state; positive means overestimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .agents import Agent, AgentConfig
from .driver import train_loop
from .envs import make_env, monte_carlo_return


@dataclass
class BiasRecord:
    state: np.ndarray
    action: np.ndarray
    q_estimate: float
    mc_return: float
    bias: float  # q_estimate - mc_return
    mc_tail_bound: float  # gamma^T truncation bound on the MC estimate


def _mc_horizon(gamma: float, tail: float = 1e-3, cap: int = 1000) -> int:
    """Steps needed for the geometric tail gamma^T to drop below ``tail``."""
    if gamma <= 0.0:
        return 1
    return min(cap, int(math.ceil(math.log(tail) / math.log(gamma))))


def collect_probe_states(agent: Agent, env, n_states: int, rng):
    """States from fresh behavior-policy episodes (noise from ``rng``,
    so probing never perturbs the agent's own exploration stream)."""
    states = []
    sig = agent.cfg.exploration_sigma
    b = env.action_bound
    while len(states) < 4 * n_states:
        s = env.reset(rng)
        for _ in range(env.horizon):
            states.append(s)
            a = agent.select_greedy_action(s)
            a = np.clip(a + rng.standard_normal(a.shape) * sig, -b, b)
            res = env.step(s, a)
            if res.done:
                break
            s = res.next_state
    idx = rng.integers(0, len(states), size=n_states)
    return [states[i] for i in idx]


def measure_bias(agent: Agent, env, n_probe_states: int, n_rollouts: int,
                 gamma: float, rng, mc_steps: int | None = None):
    """Probe the signed estimation bias at on-policy states.

    q_estimate is the min over critics at (s, pi(s)); mc_return rolls the
    greedy policy far enough that the discount tail is negligible.
    """
    if n_probe_states < 1:
        raise ValueError("n_probe_states must be >= 1")
    steps = _mc_horizon(gamma) if mc_steps is None else mc_steps
    policy = agent.select_greedy_action
    records = []
    for s in collect_probe_states(agent, env, n_probe_states, rng):
        a = agent.select_greedy_action(s)
        if agent.uses_encoder:
            e_s = agent.encoders.fixed.encode_state(s)
        else:
            e_s = None
        cin = agent._critic_input(s, e_s, a)
        q = min(float(c.forward(cin)[0]) for c in agent.critics)
        mc = monte_carlo_return(env, policy, s, gamma, n_rollouts, rng,
                                n_steps=steps)
        records.append(BiasRecord(
            state=np.asarray(s, dtype=np.float64),
            action=np.asarray(a, dtype=np.float64),
            q_estimate=q,
            mc_return=mc,
            bias=q - mc,
            mc_tail_bound=gamma ** steps,
        ))
    return records


@dataclass
class SweepCell:
    upsilon: float
    seed: int
    mean_bias: float
    mean_return: float


@dataclass
class SweepResult:
    upsilons: list
    cells: list = field(default_factory=list)

    def per_upsilon(self):
        """(upsilon, mean_bias, std_bias, mean_return, std_return) rows."""
        rows = []
        for u in self.upsilons:
            bs = [c.mean_bias for c in self.cells if c.upsilon == u]
            rs = [c.mean_return for c in self.cells if c.upsilon == u]
            rows.append((
                u,
                float(np.mean(bs)), float(np.std(bs)),
                float(np.mean(rs)), float(np.std(rs)),
            ))
        return rows

    def best_upsilon(self) -> float:
        """Argmax over the per-upsilon final mean return."""
        rows = self.per_upsilon()
        return max(rows, key=lambda r: r[3])[0]


def train_and_probe(config: AgentConfig, env_name: str, train_steps: int,
                    eval_period: int, eval_episodes: int = 10,
                    n_probe_states: int = 20, final_window: int = 10,
                    diag_callback=None):
    """Train one agent; return (final-phase mean bias, mean return, logs).

    Bias is probed and the greedy policy evaluated every eval_period
    steps; the final phase averages the last ``final_window`` rounds.
    """
    from .agents import evaluate_policy  # local to keep import graph flat

    env = make_env(env_name)
    agent = Agent(config, env)
    rng_env = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([config.seed, 1])))
    rng_eval = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([config.seed, 2])))
    rng_bias = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([config.seed, 3])))
    eval_env = make_env(env_name)

    bias_rounds, return_rounds = [], []

    def on_eval(step):
        ret = evaluate_policy(agent, eval_env, eval_episodes, rng_eval)
        recs = measure_bias(agent, eval_env, n_probe_states, 1,
                            config.gamma, rng_bias)
        return_rounds.append(ret)
        bias_rounds.append(float(np.mean([r.bias for r in recs])))

    train_loop(agent, env, train_steps, rng_env,
               eval_period=eval_period, on_eval=on_eval,
               diag_callback=diag_callback)
    if not bias_rounds:  # zero-step runs still yield a well-formed probe
        on_eval(0)
    w = min(final_window, len(bias_rounds))
    return (
        float(np.mean(bias_rounds[-w:])),
        float(np.mean(return_rounds[-w:])),
        {"bias": bias_rounds, "returns": return_rounds},
    )


def sweep_upsilon(algorithm: str, env_name: str, upsilon_grid, seeds,
                  train_steps: int, eval_period: int = 2500,
                  base_config: AgentConfig | None = None) -> SweepResult:
    """Train one agent per (upsilon, seed) and aggregate final-phase stats."""
    grid = list(upsilon_grid)
    if any(u < 0.0 or u > 1.0 for u in grid):
        raise ValueError("upsilon grid must lie inside [0, 1]")
    result = SweepResult(upsilons=grid)
    for u in grid:
        for seed in seeds:
            kw = {} if base_config is None else vars(base_config).copy()
            kw.update(algorithm=algorithm, upsilon=u, seed=seed)
            cfg = AgentConfig(**kw)
            mean_bias, mean_ret, _ = train_and_probe(
                cfg, env_name, train_steps, eval_period)
            result.cells.append(SweepCell(u, seed, mean_bias, mean_ret))
    return result
