"""
Command-line entry point.

``distoco run``             one experiment, metrics and curve CSVs
``distoco sweep``           empirical rate table over kappa
``distoco validate-graph``  check a random graph sequence's connectivity assumptions

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .comparators import InfeasibleComparatorError
from .harness import (ConfigError, checkpoints, default_output_dir, emit_csv, emit_curves_csv,
                      emit_sweep_csv, load_config, run_experiment, sweep)
from .network import er_path_sequence, validate_mixing_sequence

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("distoco")


def _overrides(parser):
    parser.add_argument("--config", help="flat key = value file")
    parser.add_argument("--algorithm", choices=["full-info", "bandit", "centralized-full-info",
                                                "centralized-bandit"])
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--T", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--rho", type=float)
    parser.add_argument("--out", help="output CSV path (default: $DISTOCO_OUTPUT_DIR/<name>.csv)")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="distoco",
                                     description="Distributed online optimization experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _overrides(run)

    sw = sub.add_parser("sweep", help="empirical rate table")
    _overrides(sw)
    sw.add_argument("--kappas", default="0.3,0.5,0.7")
    sw.add_argument("--seeds", default="0,1,2,3,4")

    vg = sub.add_parser("validate-graph", help="check a random graph sequence")
    vg.add_argument("--n", type=int, default=10)
    vg.add_argument("--rho", type=float, default=0.3)
    vg.add_argument("--T", type=int, default=1000)
    vg.add_argument("--seed", type=int, default=0)
    return parser


def _cfg(args, **extra):
    return load_config(args.config, algorithm=args.algorithm, kappa=args.kappa, T=args.T,
                       seed=args.seed, n=args.n, rho=args.rho, out=args.out, **extra)


def _cmd_run(args):
    cfg = _cfg(args)
    res = run_experiment(cfg, keep_traces=False)
    out = Path(cfg.out) if cfg.out else default_output_dir() / f"{cfg.algorithm}_k{cfg.kappa}_s{cfg.seed}.csv"
    emit_csv(res, out)
    curves = out.with_name(out.stem + "_curves.csv")
    emit_curves_csv(res, curves)
    last = res.rows[-1]
    print(f"T={last['T']} regret_static={last['regret_static']:.6g} "
          f"cum_violation={last['cum_violation']:.6g} ({res.seconds_per_round * 1e3:.3f} ms/round)")
    print(f"wrote {out} and {curves}")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = _cfg(args)
    kappas = _floats(args.kappas)
    seeds = [int(s) for s in _floats(args.seeds)]
    horizons = checkpoints(cfg.T)
    table = sweep(cfg, kappas, horizons, seeds)
    out = Path(cfg.out) if cfg.out else default_output_dir() / f"sweep_{cfg.algorithm}.csv"
    header = [f"config: {k}={v}" for k, v in cfg.items()] + [f"seeds: {seeds}", f"horizons: {horizons}"]
    emit_sweep_csv(table, out, header)
    for row in table:
        print(f"kappa={row['kappa']:g} regret_slope={row['regret_slope']:.3f} (theory {row['theory_regret']:.3f}) "
              f"violation_slope={row['violation_slope']:.3f} (theory {row['theory_violation']:.3f})")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_validate(args):
    if args.T < 1:
        raise ConfigError("T must be positive")
    try:
        seq = er_path_sequence(args.n, args.rho, args.T, args.seed)
        report = validate_mixing_sequence(seq)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(report.summary())
    tau, lam = seq.constants
    print(f"B={seq.B} w={seq.w:.6g} tau={tau:.6g} lambda={lam:.12g}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "sweep": _cmd_sweep, "validate-graph": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleComparatorError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
