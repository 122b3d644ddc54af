"""Environment-interaction loop shared by the runner and the bias sweeps."""

from __future__ import annotations

from .agents import Agent


class NumericError(RuntimeError):
    """Raised when training diagnostics go non-finite (NaN/Inf)."""


def train_loop(agent: Agent, env, total_steps: int, rng_env,
               eval_period: int = 0, on_eval=None, diag_callback=None):
    """Drive agent-environment interaction for total_steps steps.

    Episodes restart on the terminal predicate or at env.horizon; only
    true terminals are stored as done (horizon truncation still
    bootstraps).  Training starts once the warmup and one full batch are
    available.  ``on_eval(step)`` fires every eval_period steps.
    """
    s = env.reset(rng_env)
    ep_len = 0
    for t in range(1, total_steps + 1):
        a = agent.act(s)
        res = env.step(s, a)
        ep_len += 1
        agent.observe(s, a, res.reward, res.next_state, res.done)
        if res.done or ep_len >= env.horizon:
            s = env.reset(rng_env)
            ep_len = 0
        else:
            s = res.next_state
        if (agent.env_steps > agent.cfg.start_steps
                and agent.buffer.size >= agent.cfg.batch_size):
            diag = agent.train_step()
            if not diag.finite():
                raise NumericError(f"non-finite diagnostics at step {t}")
            if diag_callback is not None:
                diag_callback(t, diag)
        if eval_period and on_eval is not None and t % eval_period == 0:
            on_eval(t)
