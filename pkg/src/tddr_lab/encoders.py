"""Dual-encoder representation module with a dynamics-prediction loss.

A state encoder produces e_s = AvgL1Norm(Es(s)); a state-action encoder
maps [e_s, a] to e_sa.  The pair is trained to predict the (gradient
stopped) embedding of the next state.  Three generations are kept: the
trained pair, a fixed pair feeding the online networks, and a
target-fixed pair feeding the target networks; generations advance on a
fixed swap period.
"""

from __future__ import annotations

import numpy as np

from .nets import Adam, Mlp, avg_l1_norm, avg_l1_norm_backward


class EncoderPair:
    """State encoder + state-action encoder sharing one embedding width."""

    def __init__(self, state_dim, action_dim, embed_dim, hidden_dim, rng):
        self.embed_dim = embed_dim
        self.es_net = Mlp([state_dim, hidden_dim, embed_dim], rng)
        self.esa_net = Mlp([embed_dim + action_dim, hidden_dim, embed_dim], rng)

    def encode_state(self, s):
        """e_s = AvgL1Norm(Es(s)); mean |.| of the output is 1 unless degenerate."""
        return avg_l1_norm(self.es_net.forward(s))

    def encode_state_action(self, e_s, a):
        """e_sa = Esa([e_s, a]); no normalization on the output."""
        return self.esa_net.forward(np.concatenate([e_s, a], axis=-1))

    def params(self):
        return self.es_net.params() + self.esa_net.params()

    def copy_from(self, other: "EncoderPair"):
        self.es_net.copy_from(other.es_net)
        self.esa_net.copy_from(other.esa_net)

    def clone(self) -> "EncoderPair":
        out = EncoderPair.__new__(EncoderPair)
        out.embed_dim = self.embed_dim
        out.es_net = self.es_net.clone()
        out.esa_net = self.esa_net.clone()
        return out


def encoder_loss_and_grads(pair: EncoderPair, states, actions, next_states):
    """Dynamics-prediction MSE and its exact gradients.

    loss = mean over batch and dims of (e_sa - stopgrad(e_s'))^2.
    Gradients flow through the e_sa path only, including through e_s into
    the state encoder; the next-state branch is held fixed.
    """
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    next_states = np.atleast_2d(np.asarray(next_states, dtype=np.float64))
    n = states.shape[0]
    if n == 0:
        raise ValueError("empty batch")

    zs, es_cache = pair.es_net.forward(states, want_cache=True)
    e_s = avg_l1_norm(zs)
    x = np.concatenate([e_s, actions], axis=-1)
    e_sa, esa_cache = pair.esa_net.forward(x, want_cache=True)
    e_s2 = avg_l1_norm(pair.es_net.forward(next_states))  # stop-gradient

    diff = e_sa - e_s2
    loss = float(np.mean(diff * diff))

    g_esa = 2.0 * diff / diff.size
    esa_grads, g_x = pair.esa_net.backward(esa_cache, g_esa)
    g_es = g_x[:, : pair.embed_dim]
    g_zs = avg_l1_norm_backward(zs, g_es)
    es_grads, _ = pair.es_net.backward(es_cache, g_zs)
    return loss, es_grads + esa_grads


class EncoderTriple:
    """Train / fixed / target-fixed encoder generations plus swap schedule."""

    def __init__(self, state_dim, action_dim, embed_dim, hidden_dim, rng,
                 swap_period=250, lr=3e-4):
        self.train = EncoderPair(state_dim, action_dim, embed_dim, hidden_dim, rng)
        self.fixed = self.train.clone()
        self.target_fixed = self.train.clone()
        self.swap_period = swap_period
        self.steps_since_swap = 0
        self.opt = Adam(self.train.params(), lr=lr)

    def train_step(self, states, actions, next_states) -> float:
        loss, grads = encoder_loss_and_grads(self.train, states, actions, next_states)
        self.opt.step(self.train.params(), grads)
        return loss

    def maybe_swap(self) -> bool:
        """Advance generations once per swap_period calls.

        On the swap: target_fixed <- fixed, fixed <- train (parameter
        copies), counter resets.
        """
        self.steps_since_swap += 1
        if self.steps_since_swap < self.swap_period:
            return False
        self.target_fixed.copy_from(self.fixed)
        self.fixed.copy_from(self.train)
        self.steps_since_swap = 0
        return True
