"""Command-line front end.

Subcommands:

* ``run <config.yaml>``: execute a sweep, writing CSV + JSON artifacts.
* ``verify <fast|full>``: run the acceptance suite, one line per criterion.
* ``scan-conjecture <config.yaml>``: residual-coefficient scan for a
  scalar-flat model.

Exit codes: 0 success, 2 configuration/usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..curvature_fit import conjecture_scan
from ..errors import CapacityLabError, ConfigError, SolverConvergenceError
from .acceptance import SUITES, run_suite
from .config import load_spec
from .runner import format_float, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capacitylab",
        description="Relative capacities of small geodesic balls: sweeps, "
        "verification, curvature extraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="YAML experiment file")
    _common_flags(run_p)

    verify_p = sub.add_parser("verify", help="run the acceptance suite")
    verify_p.add_argument("suite", help="fast | full")

    scan_p = sub.add_parser(
        "scan-conjecture", help="residual r^4 scan for a scalar-flat model"
    )
    scan_p.add_argument("config", help="YAML experiment file (model must have S = 0)")
    _common_flags(scan_p)
    return parser


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--workers", type=int, default=None, help="concurrent tasks")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument(
        "--resolution", type=int, default=None, help="variational grid level"
    )


def _apply_overrides(spec, args):
    updates = {}
    if args.workers is not None:
        updates["workers"] = max(1, args.workers)
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.resolution is not None:
        updates["resolution"] = args.resolution
    return dataclasses.replace(spec, **updates) if updates else spec


def _cmd_run(args) -> int:
    spec = _apply_overrides(load_spec(args.config), args)
    outcome = run_experiment(spec)
    print(f"wrote {outcome.csv_path} ({len(outcome.rows)} rows)")
    print(f"wrote {outcome.report_path}")
    failed = [k for k, ok in outcome.invariant_checks.items() if not ok]
    if failed:
        print(f"invariant checks failed: {failed}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {list(SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if run_suite(args.suite) else 1


def _cmd_scan(args) -> int:
    spec = _apply_overrides(load_spec(args.config), args)
    scan = conjecture_scan(
        spec.model,
        spec.lambdas,
        spec.radii,
        resolution=spec.resolution,
        workers=spec.workers,
    )
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    path = spec.out_dir / f"{spec.name}_conjecture.json"
    path.write_text(
        json.dumps(dataclasses.asdict(scan), indent=2, default=str), encoding="utf-8"
    )
    print(f"model {scan.model_label}")
    print("lambda  r2_coefficient  r4_coefficient")
    for row in scan.rows:
        print(
            f"{row.lam:<7g} {format_float(row.r2_coefficient):>15} "
            f"{format_float(row.r4_coefficient):>15}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_scan(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverConvergenceError as exc:
        print(f"solver failure: {exc}; diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_SOLVER
    except CapacityLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
