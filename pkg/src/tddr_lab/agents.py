"""Training loop for the full algorithm family.

Covers DDPG and TD3 (single actor), TDDR and its convex-combination
variants DADC/DASC/SASC (double actor), and the representation-enhanced
-R variants.  One ``train_step`` performs the inner i = 1, 2 update loop:
fresh batch per actor, TD-error-driven psi, critic regression, per-critic
deterministic policy gradient, soft target updates, and (for -R) one
encoder training step plus the generation swap schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import targets
from .encoders import EncoderTriple
from .nets import Adam, Mlp, soft_update
from .replay import ReplayBuffer, Transition
from .targets import CriticEvals, TdContext

ALGORITHMS = (
    "ddpg", "td3", "tddr", "dadc", "dasc", "sasc",
    "dadc_r", "dasc_r", "sasc_r",
)


class NotReadyError(RuntimeError):
    """Raised when training is requested before the buffer holds a batch."""


class ModeError(RuntimeError):
    """Raised when a representation-only operation hits a plain agent."""


@dataclass
class AgentConfig:
    algorithm: str = "tddr"
    upsilon: float = 0.5
    gamma: float = 0.99
    tau: float = 0.005
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    exploration_sigma: float = 0.1
    batch_size: int = 64
    start_steps: int = 1000
    swap_period: int = 250
    seed: int = 0
    lr: float = 3e-4
    hidden_dim: int = 64
    embed_dim: int = 32
    buffer_capacity: int = 100_000
    policy_delay: int | None = None  # default: 2 for td3, 1 otherwise

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 <= self.upsilon <= 1.0:
            raise ValueError("upsilon must lie in [0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.policy_delay is None:
            self.policy_delay = 2 if self.algorithm == "td3" else 1


@dataclass
class StepDiagnostics:
    critic_losses: list
    psi_mean: float
    delta1_mean: float = float("nan")
    delta2_mean: float = float("nan")
    encoder_loss: float = float("nan")
    swapped: bool = False
    psi_ge_tddr: bool = True  # exact pointwise dominance check, TDDR family
    batches: list = field(default_factory=list)  # debug-mode per-i records

    def finite(self) -> bool:
        vals = self.critic_losses + [self.psi_mean]
        return bool(np.all(np.isfinite(vals)))


class Agent:
    """One actor-critic learner; owns its networks, buffer, and rng streams."""

    def __init__(self, config: AgentConfig, env, debug: bool = False):
        self.cfg = config
        self.env = env
        self.debug = debug
        self.algo = config.algorithm
        self.uses_encoder = self.algo.endswith("_r")
        self.n_actors = 1 if self.algo in ("ddpg", "td3") else 2
        self.n_critics = 1 if self.algo == "ddpg" else 2
        self.force_shared_target_action = False  # verification hook

        ss = np.random.SeedSequence([config.seed, 0])
        init_ss, expl_ss, noise_ss, sample_ss = ss.spawn(4)
        init_rng = np.random.Generator(np.random.PCG64(init_ss))
        self.rng_explore = np.random.Generator(np.random.PCG64(expl_ss))
        self.rng_noise = np.random.Generator(np.random.PCG64(noise_ss))
        self.rng_sample = np.random.Generator(np.random.PCG64(sample_ss))

        sd, ad = env.state_dim, env.action_dim
        ed = config.embed_dim if self.uses_encoder else 0
        h = config.hidden_dim
        actor_in = sd + ed
        critic_in = sd + ad + 2 * ed

        self.actors = [
            Mlp([actor_in, h, h, ad], init_rng, output="tanh",
                bound=env.action_bound)
            for _ in range(self.n_actors)
        ]
        self.critics = [
            Mlp([critic_in, h, h, 1], init_rng) for _ in range(self.n_critics)
        ]
        self.actor_targets = [a.clone() for a in self.actors]
        self.critic_targets = [c.clone() for c in self.critics]
        self.actor_opts = [Adam(a.params(), lr=config.lr) for a in self.actors]
        self.critic_opts = [Adam(c.params(), lr=config.lr) for c in self.critics]

        self.encoders = None
        if self.uses_encoder:
            self.encoders = EncoderTriple(
                sd, ad, config.embed_dim, h, init_rng,
                swap_period=config.swap_period, lr=config.lr,
            )

        self.buffer = ReplayBuffer(config.buffer_capacity, sd, ad)
        self.env_steps = 0
        self.update_count = 0

    # ---- acting ------------------------------------------------------

    def augment(self, s):
        """(augmented state, e_s) from the fixed encoder generation."""
        if not self.uses_encoder:
            raise ModeError("augment requires a representation-learning agent")
        e_s = self.encoders.fixed.encode_state(s)
        return np.concatenate([s, e_s]), e_s

    def _actor_input(self, s):
        if self.uses_encoder:
            return self.augment(s)
        return s, None

    def _critic_input(self, s, e_s, a, pair=None):
        if not self.uses_encoder:
            return np.concatenate([s, a], axis=-1)
        pair = pair or self.encoders.fixed
        e_sa = pair.encode_state_action(e_s, a)
        return np.concatenate([s, e_s, a, e_sa], axis=-1)

    def select_greedy_action(self, s):
        """Greedy-over-actors rule: the candidate with the largest single
        critic value wins (ties to actor 1)."""
        x, e_s = self._actor_input(s)
        if self.n_actors == 1:
            return self.actors[0].forward(x)
        best_a, best_v = None, -np.inf
        for actor in self.actors:
            a = actor.forward(x)
            cin = self._critic_input(s, e_s, a)
            v = max(float(c.forward(cin)[0]) for c in self.critics)
            if v > best_v:
                best_a, best_v = a, v
        return best_a

    def select_behavior_action(self, s):
        """Greedy selection plus clipped Gaussian exploration noise."""
        a = self.select_greedy_action(s)
        sig = self.cfg.exploration_sigma
        if sig > 0.0:
            noise = np.clip(
                self.rng_explore.standard_normal(a.shape) * sig,
                -self.cfg.target_noise_clip, self.cfg.target_noise_clip,
            )
            a = a + noise
        return np.clip(a, -self.env.action_bound, self.env.action_bound)

    def act(self, s):
        """Behavior policy with uniform-random warmup before start_steps."""
        if self.env_steps < self.cfg.start_steps:
            b = self.env.action_bound
            return self.rng_explore.uniform(-b, b, size=self.env.action_dim)
        return self.select_behavior_action(s)

    def observe(self, s, a, r, s2, terminal):
        self.buffer.push(Transition(s, a, r, s2, terminal))
        self.env_steps += 1

    # ---- training ----------------------------------------------------

    def _target_noise(self, n):
        sig = self.cfg.target_noise_sigma
        c = self.cfg.target_noise_clip
        eps = self.rng_noise.standard_normal((n, self.env.action_dim)) * sig
        return np.clip(eps, -c, c)

    def train_step(self) -> StepDiagnostics:
        if self.buffer.size < self.cfg.batch_size:
            raise NotReadyError("replay buffer smaller than one batch")
        self.update_count += 1
        if self.n_actors == 1:
            diag = self._train_single_actor()
        else:
            diag = self._train_double_actor()
        if self.uses_encoder:
            diag.swapped = self.encoders.maybe_swap()
        return diag

    def _train_single_actor(self) -> StepDiagnostics:
        cfg = self.cfg
        S, A, R, S2, D = self.buffer.sample(cfg.batch_size, self.rng_sample)
        b = self.env.action_bound
        a2 = self.actor_targets[0].forward(S2)
        a2 = np.clip(a2 + self._target_noise(len(S)), -b, b)
        x2 = np.concatenate([S2, a2], axis=-1)
        if self.algo == "ddpg":
            psi = targets.psi_ddpg(self.critic_targets[0].forward(x2)[:, 0])
        else:
            q1 = self.critic_targets[0].forward(x2)[:, 0]
            q2 = self.critic_targets[1].forward(x2)[:, 0]
            psi = targets.psi_cdq(q1, q2)
        y = targets.td_target(R, cfg.gamma, D, psi)

        xc = np.concatenate([S, A], axis=-1)
        losses = []
        for critic, opt in zip(self.critics, self.critic_opts):
            losses.append(self._critic_regression(critic, opt, xc, y))
        if self.update_count % cfg.policy_delay == 0:
            self._actor_ascent(0, S, None)
            soft_update(self.actor_targets[0], self.actors[0], cfg.tau)
        for critic, tgt in zip(self.critics, self.critic_targets):
            soft_update(tgt, critic, cfg.tau)

        diag = StepDiagnostics(critic_losses=losses, psi_mean=float(np.mean(psi)))
        if self.debug:
            diag.batches.append({"y": y, "psi": psi, "r": R, "done": D})
        return diag

    def _train_double_actor(self) -> StepDiagnostics:
        cfg = self.cfg
        b = self.env.action_bound
        losses, psis, d1s, d2s = [], [], [], []
        enc_loss = float("nan")
        psi_ge = True
        diag_batches = []

        for i in range(2):
            S, A, R, S2, D = self.buffer.sample(cfg.batch_size, self.rng_sample)
            n = len(S)
            if self.uses_encoder:
                if i == 0:
                    enc_loss = self.encoders.train_step(S, A, S2)
                tf = self.encoders.target_fixed
                es2 = tf.encode_state(S2)
                x2 = np.concatenate([S2, es2], axis=-1)
                es = tf.encode_state(S)
                esa = tf.encode_state_action(es, A)
                xc_cur = np.concatenate([S, es, A, esa], axis=-1)
            else:
                es2 = None
                x2 = S2
                xc_cur = np.concatenate([S, A], axis=-1)

            a1p = np.clip(self.actor_targets[0].forward(x2)
                          + self._target_noise(n), -b, b)
            a2p = np.clip(self.actor_targets[1].forward(x2)
                          + self._target_noise(n), -b, b)
            if self.force_shared_target_action:
                a2p = a1p.copy()
            if self.uses_encoder:
                xq1 = np.concatenate(
                    [S2, es2, a1p, tf.encode_state_action(es2, a1p)], axis=-1)
                xq2 = np.concatenate(
                    [S2, es2, a2p, tf.encode_state_action(es2, a2p)], axis=-1)
            else:
                xq1 = np.concatenate([S2, a1p], axis=-1)
                xq2 = np.concatenate([S2, a2p], axis=-1)

            # one stacked pass per target critic covers both next actions
            # and the current (s, a) term
            z = np.concatenate([xq1, xq2, xc_cur], axis=0)
            q1_all = self.critic_targets[0].forward(z)[:, 0]
            q2_all = self.critic_targets[1].forward(z)[:, 0]
            evals = CriticEvals(
                q11=q1_all[:n], q12=q1_all[n:2 * n], q1_cur=q1_all[2 * n:],
                q21=q2_all[:n], q22=q2_all[n:2 * n], q2_cur=q2_all[2 * n:],
            )
            d1, d2 = targets.compute_deltas(evals, R, cfg.gamma)
            ctx = TdContext(evals, R, cfg.gamma, D, cfg.upsilon, d1, d2)
            psi = targets.psi_for(self.algo, ctx)
            psi_ge = psi_ge and bool(np.all(psi >= targets.psi_tddr(ctx)))
            y = targets.td_target(R, cfg.gamma, D, psi)

            if self.uses_encoder:
                fixed = self.encoders.fixed
                ef = fixed.encode_state(S)
                efa = fixed.encode_state_action(ef, A)
                xc_on = np.concatenate([S, ef, A, efa], axis=-1)
            else:
                ef = None
                xc_on = np.concatenate([S, A], axis=-1)

            losses.append(self._critic_regression(
                self.critics[i], self.critic_opts[i], xc_on, y))
            if self.update_count % cfg.policy_delay == 0:
                self._actor_ascent(i, S, ef)
                soft_update(self.actor_targets[i], self.actors[i], cfg.tau)
            soft_update(self.critic_targets[i], self.critics[i], cfg.tau)

            psis.append(float(np.mean(psi)))
            d1s.append(float(np.mean(d1)))
            d2s.append(float(np.mean(d2)))
            if self.debug:
                diag_batches.append({
                    "evals": evals, "delta1": d1, "delta2": d2,
                    "psi": psi, "y": y, "r": R, "done": D,
                })

        return StepDiagnostics(
            critic_losses=losses,
            psi_mean=float(np.mean(psis)),
            delta1_mean=float(np.mean(d1s)),
            delta2_mean=float(np.mean(d2s)),
            encoder_loss=enc_loss,
            psi_ge_tddr=psi_ge,
            batches=diag_batches,
        )

    def _critic_regression(self, critic, opt, xc, y) -> float:
        q, cache = critic.forward(xc, want_cache=True)
        err = q[:, 0] - y
        loss = float(np.mean(err * err))
        gy = (2.0 * err / len(err))[:, None]
        grads, _ = critic.backward(cache, gy)
        opt.step(critic.params(), grads)
        return loss

    def _actor_ascent(self, i, S, e_s):
        """Gradient ascent of critic i at a = pi_i(s); for -R agents the
        action gradient also flows through the fixed state-action encoder
        (whose parameters stay untouched)."""
        actor = self.actors[i]
        critic = self.critics[min(i, self.n_critics - 1)]
        n = len(S)
        if self.uses_encoder:
            xa = np.concatenate([S, e_s], axis=-1)
        else:
            xa = S
        a, a_cache = actor.forward(xa, want_cache=True)
        if self.uses_encoder:
            esa_net = self.encoders.fixed.esa_net
            xe = np.concatenate([e_s, a], axis=-1)
            e_sa, e_cache = esa_net.forward(xe, want_cache=True)
            xc = np.concatenate([S, e_s, a, e_sa], axis=-1)
        else:
            xc = np.concatenate([S, a], axis=-1)
        _, c_cache = critic.forward(xc, want_cache=True)
        gy = np.full((n, 1), -1.0 / n)  # maximize mean Q
        _, gx = critic.backward(c_cache, gy)
        sd = self.env.state_dim
        ed = self.cfg.embed_dim if self.uses_encoder else 0
        ad = self.env.action_dim
        ga = gx[:, sd + ed:sd + ed + ad]
        if self.uses_encoder:
            g_esa = gx[:, sd + ed + ad:]
            _, g_xe = esa_net.backward(e_cache, g_esa)
            ga = ga + g_xe[:, ed:]
        grads, _ = actor.backward(a_cache, ga)
        self.actor_opts[i].step(actor.params(), grads)


def evaluate_policy(agent: Agent, env, n_episodes: int, rng) -> float:
    """Mean undiscounted episode return of the greedy policy."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    return float(np.mean(episode_returns(agent, env, n_episodes, rng)))


def episode_returns(agent: Agent, env, n_episodes: int, rng):
    """Undiscounted per-episode returns of the greedy policy."""
    out = []
    for _ in range(n_episodes):
        s = env.reset(rng)
        total = 0.0
        for _ in range(env.horizon):
            res = env.step(s, agent.select_greedy_action(s))
            total += res.reward
            if res.done:
                break
            s = res.next_state
        out.append(total)
    return out
