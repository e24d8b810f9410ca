"""Command line entry point.

Usage: spinbus <subcommand> --config <path> [--seed N] [--workers N]
       [--out DIR] [--full-scale]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The SPINBUS_WORKERS environment variable supplies the worker count when
--workers is not given.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, NumericalFailureError, SpinbusError
from .experiments import EXPERIMENTS, RUNNERS, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbus",
        description="Shuttling-based EDSR spin qubit studies.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} study")
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the base seed")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: SPINBUS_WORKERS or 1)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--full-scale", action="store_true",
                        help="run at full scale instead of desk scale")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.subcommand:
            raise ConfigError(
                f"config names experiment {cfg.experiment!r} but the "
                f"subcommand is {args.subcommand!r}")
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.full_scale:
            overrides["full_scale"] = True
        workers = args.workers
        if workers is None:
            env = os.environ.get("SPINBUS_WORKERS")
            if env is not None:
                try:
                    workers = int(env)
                except ValueError:
                    raise ConfigError(
                        f"SPINBUS_WORKERS must be an integer, got {env!r}")
        if workers is not None:
            overrides["workers"] = workers
        if overrides:
            cfg = cfg.replace(**overrides)
        RUNNERS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"spinbus: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"spinbus: numerical failure: {exc}", file=sys.stderr)
        return 3
    except SpinbusError as exc:
        print(f"spinbus: error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
