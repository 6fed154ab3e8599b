#!/usr/bin/env python3
"""Data-processing sweep: Markov states obey the inequality, a GHZ-type
fixture violates it.

Thin wrapper around the ``cpdyn dpi`` subcommand with script-friendly
defaults.

Usage: python scripts/dpi_sweep.py [--trials N] [--search-draws N] [--seed N]
"""

import argparse
import sys

from cpdyn.cli import run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--search-draws", type=int, default=500)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", type=str, default=None)
    args = parser.parse_args()

    argv = [
        "dpi",
        "--trials", str(args.trials),
        "--search-draws", str(args.search_draws),
        "--seed", str(args.seed),
    ]
    if args.out:
        argv += ["--out", args.out]
    _, code = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
