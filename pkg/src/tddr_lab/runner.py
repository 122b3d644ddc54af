"""Experiment orchestration: config parsing, seeded runs, CSV emission.

Config files are flat ``key = value`` text; unknown keys are hard errors.
Every run is fully determined by (config, seed): reruns produce
byte-identical CSVs.  Rows are flushed as they are produced so an
interrupted run leaves only complete lines behind.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .agents import Agent, AgentConfig, episode_returns
from .bias import SweepResult, measure_bias, sweep_upsilon
from .driver import train_loop
from .envs import ENV_REGISTRY, make_env


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_seeds(s: str):
    try:
        return [int(x) for x in s.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"bad seed list {s!r}") from None


@dataclass
class ExperimentConfig:
    algorithm: str = "tddr"
    env: str = "linear_track"
    upsilon: float = 0.5
    gamma: float = 0.99
    tau: float = 0.005
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    exploration_sigma: float = 0.1
    batch_size: int = 64
    start_steps: int = 1000
    swap_period: int = 250
    lr: float = 3e-4
    hidden_dim: int = 64
    embed_dim: int = 32
    buffer_capacity: int = 100_000
    policy_delay: int | None = None
    total_steps: int = 50_000
    eval_period: int = 2500
    eval_episodes: int = 10
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    out_dir: str = "results"
    measure_bias: bool = False
    bias_probe_states: int = 20
    bias_rollouts: int = 1

    def validate(self):
        if self.env not in ENV_REGISTRY:
            raise ConfigError(f"unknown environment {self.env!r}")
        if self.total_steps < self.eval_period:
            raise ConfigError("total_steps must be >= eval_period")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        try:
            self.agent_config(self.seeds[0])
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return self

    def agent_config(self, seed: int) -> AgentConfig:
        return AgentConfig(
            algorithm=self.algorithm,
            upsilon=self.upsilon,
            gamma=self.gamma,
            tau=self.tau,
            target_noise_sigma=self.target_noise_sigma,
            target_noise_clip=self.target_noise_clip,
            exploration_sigma=self.exploration_sigma,
            batch_size=self.batch_size,
            start_steps=self.start_steps,
            swap_period=self.swap_period,
            lr=self.lr,
            hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim,
            buffer_capacity=self.buffer_capacity,
            policy_delay=self.policy_delay,
            seed=seed,
        )

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


_PARSERS = {
    "algorithm": str,
    "env": str,
    "upsilon": float,
    "gamma": float,
    "tau": float,
    "target_noise_sigma": float,
    "target_noise_clip": float,
    "exploration_sigma": float,
    "batch_size": int,
    "start_steps": int,
    "swap_period": int,
    "lr": float,
    "hidden_dim": int,
    "embed_dim": int,
    "buffer_capacity": int,
    "policy_delay": int,
    "total_steps": int,
    "eval_period": int,
    "eval_episodes": int,
    "seeds": _parse_seeds,
    "out_dir": str,
    "measure_bias": _parse_bool,
    "bias_probe_states": int,
    "bias_rollouts": int,
}


def load_config(text_or_path: str) -> ExperimentConfig:
    """Parse flat key = value config text (or a path to it)."""
    if os.path.exists(text_or_path):
        with open(text_or_path) as f:
            text = f.read()
    else:
        text = text_or_path
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        elif ":" in line:
            key, _, val = line.partition(":")
        else:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key = key.strip()
        val = val.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(
                f"line {lineno}: bad value {val!r} for {key!r}") from None
    return ExperimentConfig(**values).validate()


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialize a config so load_config round-trips it."""
    lines = []
    for k, v in cfg.snapshot().items():
        if v is None:
            continue
        if k == "seeds":
            v = ",".join(str(s) for s in v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


@dataclass
class RunLog:
    seed: int
    config: dict
    rows: list = field(default_factory=list)  # (step, mean_return, [ep...])
    bias_rows: list = field(default_factory=list)  # (step, upsilon, mean, std)


def _f17(x) -> str:
    return format(float(x), ".17g")


def returns_path(out_dir, seed):
    return os.path.join(out_dir, f"returns_seed{seed}.csv")


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None,
                   seeds=None, on_row=None):
    """Run the configured experiment; one RunLog per seed.

    When out_dir is given, per-seed return rows are written and flushed
    incrementally.  ``on_row(seed, step)`` is called after each flushed
    row (test hook for crash-durability checks).
    """
    cfg.validate()
    seeds = list(cfg.seeds if seeds is None else seeds)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    logs = []
    for seed in seeds:
        env = make_env(cfg.env)
        eval_env = make_env(cfg.env)
        agent = Agent(cfg.agent_config(seed), env)
        rng_env = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, 1])))
        rng_eval = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, 2])))
        rng_bias = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, 3])))
        log = RunLog(seed=seed, config=cfg.snapshot())

        fh = None
        if out_dir is not None:
            fh = open(returns_path(out_dir, seed), "w")
            header = "step,mean_return," + ",".join(
                f"ep{i}" for i in range(cfg.eval_episodes))
            fh.write(header + "\n")
            fh.flush()

        def on_eval(step):
            eps = episode_returns(agent, eval_env, cfg.eval_episodes, rng_eval)
            mean = float(np.mean(eps))
            log.rows.append((step, mean, eps))
            if fh is not None:
                fh.write(",".join([str(step), _f17(mean)]
                                  + [_f17(e) for e in eps]) + "\n")
                fh.flush()
            if cfg.measure_bias:
                recs = measure_bias(agent, eval_env, cfg.bias_probe_states,
                                    cfg.bias_rollouts, cfg.gamma, rng_bias)
                biases = [r.bias for r in recs]
                log.bias_rows.append((step, cfg.upsilon,
                                      float(np.mean(biases)),
                                      float(np.std(biases))))
            if on_row is not None:
                on_row(seed, step)

        try:
            train_loop(agent, env, cfg.total_steps, rng_env,
                       eval_period=cfg.eval_period, on_eval=on_eval)
        finally:
            if fh is not None:
                fh.close()
        logs.append(log)
    return logs


def _write_table(path, header, rows):
    """CSV plus a gnuplot-friendly .dat mirror, 17 significant digits."""
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")
    dat = os.path.splitext(path)[0] + ".dat"
    with open(dat, "w") as f:
        f.write("# " + header.replace(",", " ") + "\n")
        for row in rows:
            f.write(" ".join(row) + "\n")


def emit_csv(logs, out_dir):
    """Per-seed return files, a cross-seed aggregate, and a bias file."""
    if not logs:
        raise ValueError("no logs to emit")
    os.makedirs(out_dir, exist_ok=True)
    n_eps = len(logs[0].rows[0][2]) if logs[0].rows else 0
    for log in logs:
        header = "step,mean_return," + ",".join(f"ep{i}" for i in range(n_eps))
        rows = [[str(step), _f17(mean)] + [_f17(e) for e in eps]
                for step, mean, eps in log.rows]
        _write_table(returns_path(out_dir, log.seed), header, rows)

    steps = [r[0] for r in logs[0].rows]
    agg_rows = []
    for k, step in enumerate(steps):
        means = [log.rows[k][1] for log in logs]
        agg_rows.append([str(step), _f17(np.mean(means)), _f17(np.std(means))])
    _write_table(os.path.join(out_dir, "aggregate.csv"),
                 "step,mean_return,std_return", agg_rows)

    if any(log.bias_rows for log in logs):
        rows = []
        for k in range(len(logs[0].bias_rows)):
            step, upsilon = logs[0].bias_rows[k][:2]
            per_seed = [log.bias_rows[k][2] for log in logs]
            rows.append([str(step), _f17(upsilon),
                         _f17(np.mean(per_seed)), _f17(np.std(per_seed))])
        _write_table(os.path.join(out_dir, "bias.csv"),
                     "step,upsilon,mean_bias,std_bias", rows)


def run_sweep(cfg: ExperimentConfig, upsilon_grid, out_dir=None) -> SweepResult:
    """Drive the upsilon sweep and emit per-upsilon plus summary tables."""
    grid = [float(u) for u in upsilon_grid]
    if any(u < 0.0 or u > 1.0 for u in grid):
        raise ConfigError("upsilon grid must lie inside [0, 1]")
    cfg.validate()
    result = sweep_upsilon(
        cfg.algorithm, cfg.env, grid, cfg.seeds, cfg.total_steps,
        eval_period=cfg.eval_period, base_config=cfg.agent_config(cfg.seeds[0]),
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for u in grid:
            rows = [[str(c.seed), _f17(c.mean_bias), _f17(c.mean_return)]
                    for c in result.cells if c.upsilon == u]
            _write_table(os.path.join(out_dir, f"sweep_u{u:g}.csv"),
                         "seed,mean_bias,mean_return", rows)
        rows = [[_f17(u), _f17(mb), _f17(sb), _f17(mr), _f17(sr)]
                for u, mb, sb, mr, sr in result.per_upsilon()]
        _write_table(os.path.join(out_dir, "sweep_summary.csv"),
                     "upsilon,mean_bias,std_bias,mean_return,std_return", rows)
        with open(os.path.join(out_dir, "best_upsilon.txt"), "w") as f:
            f.write(_f17(result.best_upsilon()) + "\n")
    return result
