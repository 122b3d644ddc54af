"""TD-target constructions for the whole algorithm family.

All operators are pure and work elementwise on scalars or numpy arrays,
so the same code serves single transitions, batches, and table lookups.

Index convention: q_ij is critic-target i evaluated at the action of
actor-target j, so the pessimistic (clipped) estimate for actor j is
m_j = min(q_1j, q_2j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


@dataclass
class CriticEvals:
    """Critic-target evaluations feeding a TD target.

    q11..q22: Q_i'(s', a_j'); q1_cur, q2_cur: Q_i'(s, a). Scalars or
    same-shaped arrays.
    """

    q11: object
    q12: object
    q21: object
    q22: object
    q1_cur: object
    q2_cur: object


@dataclass
class TdContext:
    evals: CriticEvals
    r: object
    gamma: float
    done: object
    upsilon: float
    delta1: object = None
    delta2: object = None


def compute_deltas(evals: CriticEvals, r, gamma):
    """Per-actor TD errors of the critic targets.

    delta_i = r + gamma * min(q_1i, q_2i) - min(q1_cur, q2_cur).
    """
    cur = np.minimum(evals.q1_cur, evals.q2_cur)
    d1 = r + gamma * np.minimum(evals.q11, evals.q21) - cur
    d2 = r + gamma * np.minimum(evals.q12, evals.q22) - cur
    return d1, d2


def _check_weight(u, name="upsilon"):
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return u


def _require_deltas(ctx: TdContext):
    if ctx.delta1 is None or ctx.delta2 is None:
        raise DomainError("deltas not computed; call compute_deltas first")


def psi_ddpg(q):
    """Single critic-target value, unmodified."""
    return q


def psi_cdq(q1, q2):
    """Clipped double Q-learning: min over the two critic targets."""
    return np.minimum(q1, q2)


def psi_min4_ref(evals: CriticEvals):
    """Reference operator: min over all four (critic, actor) evaluations."""
    return np.minimum(
        np.minimum(evals.q11, evals.q21), np.minimum(evals.q12, evals.q22)
    )


def psi_darc_ref(evals: CriticEvals, nu):
    """Reference operator: (1-nu) max + nu min over the per-actor CDQ values."""
    nu = _check_weight(nu, "nu")
    c1 = np.minimum(evals.q11, evals.q21)
    c2 = np.minimum(evals.q12, evals.q22)
    return (1.0 - nu) * np.maximum(c1, c2) + nu * np.minimum(c1, c2)


def _selected(ctx: TdContext):
    """True where actor 1 has the smaller-magnitude TD error (ties -> actor 1)."""
    _require_deltas(ctx)
    return np.abs(ctx.delta1) <= np.abs(ctx.delta2)


def psi_tddr(ctx: TdContext):
    """CDQ value at the action of the actor with the smaller |TD error|."""
    e = ctx.evals
    sel1 = _selected(ctx)
    m1 = np.minimum(e.q11, e.q21)
    m2 = np.minimum(e.q12, e.q22)
    return np.where(sel1, m1, m2)


def psi_dadc(ctx: TdContext):
    """Symmetric convex combination of both pessimistic estimates."""
    u = _check_weight(ctx.upsilon)
    e = ctx.evals
    sel1 = _selected(ctx)
    m1 = np.minimum(e.q11, e.q21)
    m2 = np.minimum(e.q12, e.q22)
    # lerp form keeps the value inside [min, max] exactly in fp and makes
    # upsilon = 1 reduce to psi_tddr bitwise
    return np.where(sel1, m1 + (1.0 - u) * (m2 - m1),
                    m2 + (1.0 - u) * (m1 - m2))


def psi_dasc(ctx: TdContext):
    """Asymmetric combination: selected CDQ plus critic 1 at the other action.

    The optimistic term is always critic 1, exactly as the update rule is
    written; no symmetrization.
    """
    u = _check_weight(ctx.upsilon)
    e = ctx.evals
    sel1 = _selected(ctx)
    m1 = np.minimum(e.q11, e.q21)
    m2 = np.minimum(e.q12, e.q22)
    return np.where(
        sel1, m1 + (1.0 - u) * (e.q12 - m1), m2 + (1.0 - u) * (e.q11 - m2)
    )


def psi_sasc(ctx: TdContext):
    """Asymmetric combination on the selected actor's action only.

    Both terms use the selected action; the optimistic one is critic 1
    at that action (q_1i), again hard-wired to critic 1.
    """
    u = _check_weight(ctx.upsilon)
    e = ctx.evals
    sel1 = _selected(ctx)
    m1 = np.minimum(e.q11, e.q21)
    m2 = np.minimum(e.q12, e.q22)
    # m_i + (1-u)(q_1i - m_i): the optimistic term is >= the clipped one,
    # so dominance over psi_tddr is exact, not just up to rounding
    return np.where(
        sel1, m1 + (1.0 - u) * (e.q11 - m1), m2 + (1.0 - u) * (e.q12 - m2)
    )


_PSI_BY_ALGO = {
    "tddr": psi_tddr,
    "dadc": psi_dadc,
    "dasc": psi_dasc,
    "sasc": psi_sasc,
}


def psi_for(algorithm: str, ctx: TdContext):
    """Dispatch ctx -> psi for the TDDR-family algorithms."""
    base = algorithm[:-2] if algorithm.endswith("_r") else algorithm
    try:
        fn = _PSI_BY_ALGO[base]
    except KeyError:
        raise DomainError(f"no TDDR-family psi for algorithm {algorithm!r}")
    return fn(ctx)


def td_target(r, gamma, done, psi):
    """y = r + gamma * (1 - done) * psi.

    done masks bootstrapping on true terminal transitions only; horizon
    truncation must not set it.
    """
    return r + gamma * (1.0 - np.asarray(done, dtype=np.float64)) * psi
