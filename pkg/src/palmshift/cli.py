"""Command line entry point: run named experiments from JSON configs."""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENT_NAMES, ExperimentConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palmshift",
        description="Point-shift experiments on stationary point processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, help="path to the config JSON")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    run.add_argument("--out", default=None,
                     help="directory for report.json and CSV artifacts")
    run.add_argument("--workers", type=int, default=None,
                     help="override the config worker count")
    sub.add_parser("list", help="print the available experiment names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in EXPERIMENT_NAMES:
            print(name)
        return 0
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.workers is not None:
        doc["workers"] = args.workers
    try:
        config = ExperimentConfig.from_dict(doc)
        report = run_experiment(config, out_dir=args.out)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, gate in sorted(report.gates.items()):
        status = "PASS" if gate["passed"] else "FAIL"
        print(f"[{status}] {report.experiment}: {name}")
    print(f"wall time: {report.wall_time_s:.2f} s", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
