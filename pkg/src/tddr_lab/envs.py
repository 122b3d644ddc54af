"""Desk-scale continuous-control environments with closed-form structure.

Environments are pure state machines: ``step(state, action)`` is a
deterministic function of its arguments and the only randomness enters
through the rng passed to ``reset``.  ``StepResult.done`` reports the
terminal predicate only; horizon truncation is tracked by the episode
driver (the horizon is advertised via ``env.horizon``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import ShapeError


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool  # terminal predicate, not horizon truncation


class LinearTrack:
    """1-D track: s' = s + 0.1 a, r = -|s'|.  Starts at the origin."""

    name = "linear_track"
    state_dim = 1
    action_dim = 1
    action_bound = 1.0
    horizon = 50

    def reset(self, rng) -> np.ndarray:
        return np.zeros(1)

    def step(self, state, action) -> StepResult:
        state = np.asarray(state, dtype=np.float64)
        action = np.asarray(action, dtype=np.float64)
        if state.shape != (1,) or action.shape != (1,):
            raise ShapeError("LinearTrack expects 1-D state and action")
        s2 = state + 0.1 * action
        return StepResult(s2, -abs(float(s2[0])), False)


class PointReach:
    """2-D point mass: s' = s + 0.1 a, r = -||s' - goal||.

    Starts uniformly in [-1, 1]^2; terminates inside the goal radius.
    """

    name = "point_reach"
    state_dim = 2
    action_dim = 2
    action_bound = 1.0
    horizon = 100
    goal = np.array([0.5, 0.5])
    goal_radius = 0.05

    def reset(self, rng) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=2)

    def step(self, state, action) -> StepResult:
        state = np.asarray(state, dtype=np.float64)
        action = np.asarray(action, dtype=np.float64)
        if state.shape != (2,) or action.shape != (2,):
            raise ShapeError("PointReach expects 2-D state and action")
        s2 = state + 0.1 * action
        dist = float(np.linalg.norm(s2 - self.goal))
        return StepResult(s2, -dist, dist < self.goal_radius)


class Pendulum1D:
    """Torque-limited pendulum swing-up, state (theta, theta_dot).

    theta = 0 is upright; reward -(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)
    is maximal (zero) at the upright equilibrium with zero torque.
    """

    name = "pendulum"
    state_dim = 2
    action_dim = 1
    action_bound = 2.0
    horizon = 200
    g = 10.0
    m = 1.0
    length = 1.0
    dt = 0.05
    max_speed = 8.0

    def reset(self, rng) -> np.ndarray:
        th = rng.uniform(-np.pi, np.pi)
        thdot = rng.uniform(-1.0, 1.0)
        return np.array([th, thdot])

    def step(self, state, action) -> StepResult:
        state = np.asarray(state, dtype=np.float64)
        action = np.asarray(action, dtype=np.float64)
        if state.shape != (2,) or action.shape != (1,):
            raise ShapeError("Pendulum1D expects state (2,) and action (1,)")
        th, thdot = state
        u = float(action[0])
        cost = _angle_norm(th) ** 2 + 0.1 * thdot**2 + 0.001 * u**2
        thdot2 = thdot + (
            3.0 * self.g / (2.0 * self.length) * np.sin(th)
            + 3.0 / (self.m * self.length**2) * u
        ) * self.dt
        thdot2 = float(np.clip(thdot2, -self.max_speed, self.max_speed))
        th2 = _angle_norm(th + thdot2 * self.dt)
        return StepResult(np.array([th2, thdot2]), -cost, False)


def _angle_norm(x: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return float((x + np.pi) % (2.0 * np.pi) - np.pi)


ENV_REGISTRY = {
    LinearTrack.name: LinearTrack,
    PointReach.name: PointReach,
    Pendulum1D.name: Pendulum1D,
}


def make_env(name: str):
    try:
        return ENV_REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}") from None


def rollout_return(env, policy, start_state, gamma, n_steps) -> float:
    """Discounted return of one rollout from start_state (pure dynamics)."""
    s = np.asarray(start_state, dtype=np.float64)
    total = 0.0
    disc = 1.0
    for _ in range(n_steps):
        res = env.step(s, policy(s))
        total += disc * res.reward
        if res.done:
            break
        disc *= gamma
        s = res.next_state
    return total


def monte_carlo_return(env, policy, start_state, gamma, n_rollouts, rng,
                       n_steps=None) -> float:
    """Mean discounted return over rollouts following policy.

    Rollouts run for n_steps (default: env.horizon) or until the terminal
    predicate fires.  With deterministic dynamics and a deterministic
    policy all rollouts coincide; the rng is unused in that case.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    steps = env.horizon if n_steps is None else n_steps
    vals = [rollout_return(env, policy, start_state, gamma, steps)
            for _ in range(n_rollouts)]
    return float(np.mean(vals))
