"""Command line entry point: ``rcarmh <experiment> [--config FILE] [--seed N] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import sys

from .experiments import RUNNERS, ConfigError, load_config, run_experiment
from .experiments.config import describe_defaults


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcarmh", description="Run an RCAR Metropolis-Hastings experiment and write CSV + summary.json.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="configuration defaults (override in an INI file):\n" + describe_defaults())
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="INI file with [chain] [kernel] [potential] [semimetric] [sweep]")
        p.add_argument("--seed", type=int, help="master seed (overrides [chain] seed)")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--replicas", type=int, help="replica count (overrides [chain] replicas)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent sweep points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return 2
        overrides["chain.seed"] = args.seed
    if args.replicas is not None:
        overrides["chain.replicas"] = args.replicas
    try:
        cfg = load_config(args.experiment, args.config, overrides, args.threads)
        report = run_experiment(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_path, json_path = report.write(args.out)
    for key, ok in report.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {key}")
    print(f"wrote {csv_path} and {json_path}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
