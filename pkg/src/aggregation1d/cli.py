"""Command line entry point: ``aggregation1d <scenario> --config <path> [--out DIR] [--seed N]``.

Exit status is 0 when every check in the scenario passes, 1 when a check
fails, and 2 for configuration or solver errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SCENARIOS, ConfigError, parse_config
from .experiments import ExperimentError, run_experiment

log = logging.getLogger("aggregation1d")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggregation1d", description=__doc__.splitlines()[0])
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    ap.add_argument("-q", "--quiet", action="store_true", help="only report failures")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    overrides = {}
    if args.out is not None:
        overrides["output"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = parse_config(args.config, args.scenario, overrides)
        report = run_experiment(cfg)
    except (ConfigError, ExperimentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report.summary_lines():
        (log.warning if line.startswith("FAIL") else log.info)(line)
    log.info("outputs written to %s", cfg.output)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
