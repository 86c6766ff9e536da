#!/usr/bin/env python3
"""
Metropolis-Hastings contraction experiments.

Usage:
    py run_experiment.py scaling --config configs/scaling_tps.yaml
    py run_experiment.py couple --config configs/couple_quadratic.yaml --seed 7 --out reports/couple7
"""

import argparse
import sys
from pathlib import Path

from src.core.experiment_config import EXPERIMENTS, ConfigValidationError, load_experiment_config
from src.core.runner import run_experiment
from src.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Metropolis-Hastings sampler, coupling and bound experiments")
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, help=f"Run the '{name}' experiment")
        sub.add_argument("--config", type=Path, required=True, help="Path to the YAML experiment file")
        sub.add_argument("--seed", type=int, help="Override run.seed")
        sub.add_argument("--out", type=Path, help="Override output.directory")
        sub.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.seed is not None and args.seed < 0:
        setup_logging(args.verbose)
        logger.error("❌ --seed must be a nonnegative integer")
        return 2

    try:
        config = load_experiment_config(
            args.config, experiment=args.experiment, seed_override=args.seed,
            out_override=str(args.out) if args.out is not None else None,
        )
    except ConfigValidationError as e:
        setup_logging(args.verbose)
        logger.error(f"❌ Invalid experiment file: {e}")
        return 2

    return run_experiment(config, verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
