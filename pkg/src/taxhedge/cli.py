"""Command-line entry point: ``taxhedge {reserves,hedge,two-step,validate}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .scenario_io import (
    ConfigError,
    NumericalError,
    parse_scenario,
    run_hedge_report,
    run_reserves,
    run_two_step,
    write_outputs,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="taxhedge",
        description="Risk-minimizing hedging of life insurance payments under taxes and expenses.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("reserves", "state-wise reserve curves"),
        ("hedge", "illustration paths, risk report and perturbation table"),
        ("two-step", "two-step consistency check at time 0"),
        ("validate", "validate a configuration without computing anything"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, type=Path, help="scenario JSON file")
        if name != "validate":
            s.add_argument("--out", required=True, type=Path, help="output directory")
        s.add_argument("--seed", type=int, help="override the configured seed")
        s.add_argument("--paths", type=int, help="override the number of Monte Carlo paths")
        s.add_argument("--grid", type=int, help="override the number of time steps")
    return p


def _run(args) -> int:
    try:
        config = parse_scenario(args.config.read_bytes())
        config = config.with_overrides(seed=args.seed, paths=args.paths, grid=args.grid)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        print(f"{args.config}: ok")
        return EXIT_OK

    try:
        if args.command == "reserves":
            tables = {"reserves": run_reserves(config)}
        elif args.command == "hedge":
            report = run_hedge_report(config)
            tables = {}
            if "strategy_paths" in config.outputs:
                tables["strategy_paths"] = report.paths
            if "risk_report" in config.outputs:
                tables["risk_report"] = report.risk
                tables["perturbations"] = report.perturbations
        else:
            tables = {"two_step": run_two_step(config)}
    except (NumericalError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    manifest = write_outputs(args.out, args.command, config, tables, __version__)
    print(manifest)
    return EXIT_OK


def main(argv=None) -> int:
    return _run(_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
