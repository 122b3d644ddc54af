"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 numeric error (NaN detected),
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import gradcheck as gc
from .driver import NumericError
from .runner import ConfigError, emit_csv, load_config, run_experiment, run_sweep
from .tabular import TABULAR_ALGOS, make_random_mdp, tabular_variant_train, value_iteration

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    seeds = args.seed_override if args.seed_override else None
    logs = run_experiment(cfg, out_dir=cfg.out_dir, seeds=seeds)
    emit_csv(logs, cfg.out_dir)
    for log in logs:
        final = log.rows[-1][1] if log.rows else float("nan")
        print(f"seed {log.seed}: {len(log.rows)} evaluations, "
              f"final mean return {final:.4f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    grid = [float(u) for u in args.upsilon.split(",")]
    result = run_sweep(cfg, grid, out_dir=cfg.out_dir)
    for u, mb, sb, mr, sr in result.per_upsilon():
        print(f"upsilon {u:g}: bias {mb:+.4f} +- {sb:.4f}, "
              f"return {mr:.4f} +- {sr:.4f}")
    print(f"best upsilon by final return: {result.best_upsilon():g}")
    return EXIT_OK


def _cmd_bias(args) -> int:
    cfg = load_config(args.config)
    cfg.measure_bias = True
    if args.out:
        cfg.out_dir = args.out
    logs = run_experiment(cfg, out_dir=cfg.out_dir)
    emit_csv(logs, cfg.out_dir)
    for log in logs:
        if log.bias_rows:
            last = log.bias_rows[-1]
            print(f"seed {log.seed}: final mean bias {last[2]:+.4f}")
    return EXIT_OK


def _cmd_tabular_check(args) -> int:
    """Empirical convergence check of the tabular variants against Q*."""
    failures = 0
    for seed in range(args.seeds):
        rng = np.random.Generator(np.random.PCG64(seed))
        mdp = make_random_mdp(rng, 5, 3, 0.9)
        q_star = value_iteration(mdp)
        tol = 0.05 * (1.0 + np.max(np.abs(q_star)))
        for algo in TABULAR_ALGOS:
            for upsilon in (0.0, 0.5, 1.0):
                run_rng = np.random.Generator(
                    np.random.PCG64(np.random.SeedSequence([seed, 7])))
                q = tabular_variant_train(mdp, algo, upsilon, args.steps,
                                          run_rng, oracle=q_star, tol=tol)
                err = float(np.max(np.abs(q - q_star)))
                ok = err <= tol
                failures += 0 if ok else 1
                print(f"seed {seed} {algo} upsilon {upsilon:g}: "
                      f"max error {err:.4f} (tol {tol:.4f}) "
                      f"{'ok' if ok else 'FAIL'}")
    if failures:
        print(f"{failures} tabular runs missed tolerance")
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    worst = gc.run_gradcheck(n_nets=args.nets, seed=args.gc_seed)
    print(f"max relative gradient error over {args.nets} nets: {worst:.3e}")
    if worst > 1e-4:
        print("gradient check FAILED")
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tddr-lab",
        description="Desk-scale TDDR-family actor-critic experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run a training experiment")
    t.add_argument("--config", required=True)
    t.add_argument("--seed-override", type=int, nargs="*", default=None)
    t.add_argument("--out", default=None)
    t.set_defaults(fn=_cmd_train)

    s = sub.add_parser("sweep", help="upsilon sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--upsilon", required=True,
                   help="comma-separated grid, e.g. 0,0.5,1")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=_cmd_sweep)

    b = sub.add_parser("bias", help="train with estimation-bias probing")
    b.add_argument("--config", required=True)
    b.add_argument("--out", default=None)
    b.set_defaults(fn=_cmd_bias)

    tc = sub.add_parser("tabular-check",
                        help="tabular convergence check against value iteration")
    tc.add_argument("--seeds", type=int, default=5)
    tc.add_argument("--steps", type=int, default=500_000)
    tc.set_defaults(fn=_cmd_tabular_check)

    g = sub.add_parser("gradcheck",
                       help="backprop vs central finite differences")
    g.add_argument("--nets", type=int, default=100)
    g.add_argument("--gc-seed", type=int, default=0)
    g.set_defaults(fn=_cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
