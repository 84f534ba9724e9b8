"""Command-line entry point.

Exit status: 0 on success, 1 on validation errors (bad config, bad data,
statistics preconditions), 2 on runtime failures such as unwritable output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .benchmarks import UnknownBenchmark
from .core import ConfigurationError
from .neuralnet import DatasetError, EncodingError, synth_kinematics
from .stats import StatisticsError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

VALIDATION_ERRORS = (ConfigurationError, DatasetError, EncodingError, StatisticsError,
                     UnknownBenchmark, json.JSONDecodeError)


def cmd_run(args) -> int:
    config = harness.ExperimentConfig.load(args.config)
    path = harness.run_experiment(config)
    rows = harness.read_summary(path)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {path} ({len(rows)} runs, {failed} failed)")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = harness.read_summary(args.a)
    b = harness.read_summary(args.b)
    print(harness.compare_summaries(a, b, args.alpha).format())
    return EXIT_OK


def cmd_rank(args) -> int:
    rows = []
    for path in args.summaries:
        rows.extend(harness.read_summary(path))
    print(harness.rank_summaries(rows, args.reference, args.delta).format())
    return EXIT_OK


def cmd_train_nn(args) -> int:
    results = harness.train_nn(args.data, args.hidden, args.seeds, args.budget_multiplier,
                               split_seed=args.split_seed)
    for label, attr in (("train", "train_mse"), ("validation", "validation_mse"), ("test", "test_mse")):
        values = np.array([getattr(r, attr) for r in results])
        print(f"{label} MSE: {values.mean():.4e} +- {values.std():.4e}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(harness.nn_summary_csv(results, args.hidden), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_gen_kin(args) -> int:
    if args.n < 1:
        raise ConfigurationError("--n must be at least 1")
    synth_kinematics(args.n, args.noise, args.seed).to_csv(args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mscap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an algorithm x problem x seed grid from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="pairwise Wilcoxon comparison of two summary CSVs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rank", help="Holm-Bonferroni ranking over summary CSVs")
    p.add_argument("--summaries", nargs="+", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("train-nn", help="train the kinematics network with MS-CAP")
    p.add_argument("--data", required=True, help="CSV path or synthetic:<medium|high>:<n>")
    p.add_argument("--hidden", type=int, default=4)
    p.add_argument("--seeds", type=int, default=32)
    p.add_argument("--budget-multiplier", type=int, default=5000)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", default="train_nn_summary.csv")
    p.set_defaults(func=cmd_train_nn)

    p = sub.add_parser("gen-kin", help="write a synthetic kinematics dataset CSV")
    p.add_argument("--n", type=int, default=8192)
    p.add_argument("--noise", choices=["medium", "high"], default="medium")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_kin)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
