"""Command-line batch runner: ``seqgibbs <subcommand> --config cfg.json --out dir``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig
from .experiments import EXPERIMENTS, RunContext
from .report import Report, emit_csv, emit_json
from .thermo import ConvergenceError

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqgibbs", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--oracle", action="store_true", help="also run brute-force cross-checks")
    return parser


def run(command: str, cfg: ExperimentConfig, out: str | Path, jobs: int = 1,
        oracle: bool = False) -> tuple[int, Report | None]:
    try:
        report = EXPERIMENTS[command](cfg, RunContext(jobs=max(1, jobs), oracle=oracle))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE, None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(report, out / f"{command}.csv")
    emit_json(report, out / f"{command}.json", __version__)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {command}.{c.name}: value={c.value} bound={c.bound} {c.detail}".rstrip())
    return (EXIT_OK if report.passed else EXIT_INVARIANT), report


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment is not None and cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            cfg = dataclasses.replace(cfg, seed=args.seed, seeds=None)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, _ = run(args.command, cfg, args.out, args.jobs, args.oracle)
    return code


if __name__ == "__main__":
    sys.exit(main())
