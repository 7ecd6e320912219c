"""Command line entry point: ``qcomp run | validate | selftest``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import config
from .netgen import ConfigError

EXIT_OK = 0
EXIT_NONCONVERGED = 1
EXIT_USAGE = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcomp", description="CoMP beamforming with low-resolution DACs")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a config file")
    run.add_argument("config", help="flat key = value config file")
    run.add_argument("--preset", choices=config.PRESETS, help="override the preset in the file")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    run.add_argument("--allow-nonconverged", action="store_true", help="exit 0 even if some runs did not converge")
    run.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True, help="render PNG figures next to the CSV files")

    val = sub.add_parser("validate", help="check a config file and print it with defaults filled in")
    val.add_argument("config")
    val.add_argument("--preset", choices=config.PRESETS)

    sub.add_parser("selftest", help="run the built-in numerical checks")
    return p


def _cmd_run(args) -> int:
    from .experiment import format_summary, run_experiment

    spec = config.load(args.config, preset=args.preset)
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    result = run_experiment(spec, args.out, jobs=args.jobs, seed=args.seed, figures=args.figures)
    print(format_summary(result.summary))
    for path in result.files:
        print(f"wrote {path}")
    if not result.all_converged:
        bad = sum(1 for r in result.runs if not r.get("converged"))
        print(f"{bad} of {len(result.runs)} runs did not converge", file=sys.stderr)
        if not args.allow_nonconverged:
            return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_validate(args) -> int:
    spec = config.load(args.config, preset=args.preset)
    sys.stdout.write(config.serialize(spec))
    n = len(spec.sinr_db) * len(spec.bits) * spec.n_realizations
    print(f"# ok: {n} sweep points, {2 * n} solves")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import selftest

    return EXIT_OK if selftest.run() else EXIT_NONCONVERGED


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    handler = {"run": _cmd_run, "validate": _cmd_validate, "selftest": _cmd_selftest}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
