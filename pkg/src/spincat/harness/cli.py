"""Command-line entry point: one subcommand per experiment kind.

Exit codes: 0 on success, 2 for config validation failures, 3 when a
numerical guard (truncation or heating regime) trips.
"""

from __future__ import annotations

import argparse
import sys

from ..correction import GuardViolation
from .config import EXPERIMENTS, ConfigError, default_config, load_config
from .experiments import run_experiment
from .output import render_quicklook, write_record


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincat",
        description="Spin-cat qudit error-correction simulator and analysis runner.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for kind in EXPERIMENTS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="TOML config file (defaults used otherwise)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--trials", type=int, help="trials per point (override)")
        p.add_argument("--workers", type=int, help="parallel point workers")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--plot", action="store_true",
                       help="write an SVG quick-look (needs matplotlib)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        overrides = {"seed": ns.seed, "trials": ns.trials, "workers": ns.workers}
        if ns.config:
            overrides["experiment"] = ns.experiment
            config = load_config(ns.config, **overrides)
        else:
            if ns.seed is None:
                raise ConfigError("seed is mandatory: pass --seed or a config file")
            config = default_config(ns.experiment, ns.seed,
                                    trials=ns.trials, workers=ns.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        record = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GuardViolation as exc:
        print(f"numerical guard tripped: {exc}", file=sys.stderr)
        return 3

    written = write_record(record, ns.out, fmt=ns.format)
    if ns.plot:
        svg = render_quicklook(record, ns.out)
        if svg is not None:
            written.append(svg)
        elif not ns.quiet:
            print("quick-look skipped: matplotlib not installed", file=sys.stderr)
    if not ns.quiet:
        print(f"{config.experiment}: {len(record.rows)} rows "
              f"(seed {config.seed}, hash {config.config_hash()[:12]})")
        for path in written:
            print(f"  wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
