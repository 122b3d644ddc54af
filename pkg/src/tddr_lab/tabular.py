"""Finite-MDP instruments: value iteration and tabular double-critic variants.

The tabular analogues replace network evaluations with table lookups:
two Q-tables play the critics, and each "actor" is the greedy selector
over its paired table.  They empirically verify that the convex-combination
target constructions converge to the same optimal Q-function as value
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import targets
from .targets import CriticEvals, TdContext

TABULAR_ALGOS = ("tddr", "dadc", "dasc", "sasc")


@dataclass
class TabularMdp:
    P: np.ndarray  # (S, A, S) transition probabilities
    R: np.ndarray  # (S, A) rewards
    gamma: float

    @property
    def n_states(self):
        return self.P.shape[0]

    @property
    def n_actions(self):
        return self.P.shape[1]


def make_random_mdp(rng, n_states, n_actions, gamma) -> TabularMdp:
    """Random dense MDP: Dirichlet-free normalized rows, rewards in [0, 1]."""
    if n_states < 2 or n_actions < 2:
        raise ValueError("need at least 2 states and 2 actions")
    P = rng.uniform(0.01, 1.0, size=(n_states, n_actions, n_states))
    P /= P.sum(axis=-1, keepdims=True)
    R = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    return TabularMdp(P, R, gamma)


def value_iteration(mdp: TabularMdp, tol=1e-10, max_iters=100_000) -> np.ndarray:
    """Bellman-optimality iteration until the sup-norm change falls below tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    Q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iters):
        Q_new = mdp.R + mdp.gamma * mdp.P @ Q.max(axis=1)
        if np.max(np.abs(Q_new - Q)) < tol:
            return Q_new
        Q = Q_new
    return Q


def tabular_variant_train(
    mdp: TabularMdp,
    algorithm: str,
    upsilon: float,
    n_steps: int,
    rng,
    lr_power: float = 0.6,
    oracle: np.ndarray | None = None,
    check_every: int = 10_000,
    tol: float | None = None,
) -> np.ndarray:
    """Run a tabular TDDR-family learner; returns min(Q1, Q2).

    Per step a (s, a) pair is drawn uniformly, the next state is sampled
    from P, and both tables move toward r + gamma * psi with step size
    1 / (1 + visits)^lr_power.  If an oracle table and tol are given,
    training stops early once max|min(Q1,Q2) - oracle| <= tol.
    """
    if algorithm not in TABULAR_ALGOS:
        raise ValueError(f"no tabular analogue for {algorithm!r}")
    nS, nA = mdp.n_states, mdp.n_actions
    gamma = mdp.gamma
    Q1 = np.zeros((nS, nA))
    Q2 = np.zeros((nS, nA))
    visits = np.zeros((nS, nA))
    cum_P = np.cumsum(mdp.P, axis=-1)

    done_steps = 0
    while done_steps < n_steps:
        k = min(check_every, n_steps - done_steps)
        ss = rng.integers(0, nS, size=k)
        aa = rng.integers(0, nA, size=k)
        uu = rng.random(size=k)
        for j in range(k):
            s, a = ss[j], aa[j]
            s2 = int(np.searchsorted(cum_P[s, a], uu[j]))
            r = mdp.R[s, a]
            a1p = int(np.argmax(Q1[s2]))
            a2p = int(np.argmax(Q2[s2]))
            evals = CriticEvals(
                q11=Q1[s2, a1p], q12=Q1[s2, a2p],
                q21=Q2[s2, a1p], q22=Q2[s2, a2p],
                q1_cur=Q1[s, a], q2_cur=Q2[s, a],
            )
            d1, d2 = targets.compute_deltas(evals, r, gamma)
            ctx = TdContext(evals, r, gamma, 0.0, upsilon, d1, d2)
            psi = float(targets.psi_for(algorithm, ctx))
            y = r + gamma * psi
            visits[s, a] += 1.0
            alpha = 1.0 / (1.0 + visits[s, a]) ** lr_power
            Q1[s, a] += alpha * (y - Q1[s, a])
            Q2[s, a] += alpha * (y - Q2[s, a])
        done_steps += k
        if oracle is not None and tol is not None:
            if np.max(np.abs(np.minimum(Q1, Q2) - oracle)) <= tol:
                break
    return np.minimum(Q1, Q2)
