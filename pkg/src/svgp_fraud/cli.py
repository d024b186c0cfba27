"""Command-line entry point: ``svgp-fraud {train,eval,sweep,verify,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import data as data_mod
from . import pipeline
from .errors import SvgpError


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _m_list(s: str) -> list[int]:
    return [_positive_int(p) for p in s.split(",") if p.strip()]


def _add_common(p: argparse.ArgumentParser, sweep: bool = False):
    p.add_argument("--data", type=Path, required=True, help="CSV with a header row and a 0/1 label column")
    p.add_argument("--label-column", default="Class")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--test-fraud-ratio", type=float, default=0.15,
                   help="fraud share of the rebuilt test set; <= 0 keeps the natural skew")
    p.add_argument("--train-fraud-ratio", type=float, default=None,
                   help="optionally rebalance the training set too")
    p.add_argument("--kernel", default="rbf" if not sweep else "rbf,matern32,matern32+white",
                   help="rbf | matern32 | matern32+white" + (" (comma-separated list)" if sweep else ""))
    p.add_argument("--lengthscale", type=float, default=1.0)
    p.add_argument("--signal-variance", type=float, default=2.0)
    p.add_argument("--white-variance", type=float, default=1.0)
    if sweep:
        p.add_argument("--m", type=_m_list, default=[50, 100, 150], help="comma-separated inducing counts")
    else:
        p.add_argument("--m", type=_positive_int, default=50, help="number of inducing points")
    p.add_argument("--batch-size", type=_positive_int, default=100)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--lr", type=float, default=None, help="default 0.01 (adam) or 0.001 (sgd)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--freeze-z", action="store_true", help="keep inducing inputs at their k-means values")
    p.add_argument("--train-hyperparams", action="store_true")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--standardize-columns", default=None,
                   help="comma-separated feature names to standardize (default: all)")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--jobs", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svgp-fraud", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("train", help="fit a model and write model.gpc + trace.tsv"))

    ev = sub.add_parser("eval", help="score a saved model on its test split, write report.tsv")
    ev.add_argument("--model", type=Path, required=True)
    ev.add_argument("--data", type=Path, required=True)
    ev.add_argument("--seed", type=int, default=None, help="override the stored split seed")
    ev.add_argument("--threshold", type=float, default=0.5)
    ev.add_argument("--out", type=Path, default=Path("out"))

    _add_common(sub.add_parser("sweep", help="train/evaluate every kernel x M cell, write sweep.tsv"), sweep=True)

    sub.add_parser("verify", help="run the oracle equivalence checks")

    sy = sub.add_parser("synth", help="write a synthetic CSV shaped like the fraud table")
    sy.add_argument("--kind", choices=("blobs", "fraud"), default="fraud")
    sy.add_argument("--n", type=_positive_int, default=5000)
    sy.add_argument("--prevalence", type=float, default=0.00172)
    sy.add_argument("--dim", type=_positive_int, default=30)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", type=Path, required=True)
    return parser


def config_from_args(args) -> pipeline.RunConfig:
    ratio = args.test_fraud_ratio if args.test_fraud_ratio and args.test_fraud_ratio > 0 else None
    split = data_mod.SplitSpec(args.train_fraction, ratio, args.seed, args.train_fraud_ratio)
    train_cfg = pipeline.make_train_config(
        args.optimizer,
        args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        freeze_inducing=args.freeze_z,
        train_hyperparams=args.train_hyperparams,
    )
    cols = tuple(c.strip() for c in args.standardize_columns.split(",")) if args.standardize_columns else None
    return pipeline.RunConfig(
        data=args.data,
        label_column=args.label_column,
        split=split,
        kernel=args.kernel,
        lengthscale=args.lengthscale,
        signal_variance=args.signal_variance,
        white_variance=args.white_variance,
        M=args.m if isinstance(args.m, int) else args.m[0],
        train=train_cfg,
        out=args.out,
        threshold=args.threshold,
        standardize_columns=cols,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train":
            rec, trace = pipeline.run_train(config_from_args(args))
            print(f"wrote {args.out / 'model.gpc'} (final elbo {trace.records[-1].elbo:.6g})"
                  if trace.records else f"wrote {args.out / 'model.gpc'}")
        elif args.command == "eval":
            cfg = pipeline.RunConfig(data=args.data, out=args.out, threshold=args.threshold)
            report = pipeline.run_eval(args.model, cfg, requested_seed=args.seed)
            sys.stdout.write(report.to_record())
        elif args.command == "sweep":
            cfg = config_from_args(args)
            kernels = [k.strip() for k in args.kernel.split(",") if k.strip()]
            results = pipeline.run_sweep(cfg, kernels, args.m, jobs=args.jobs)
            sys.stdout.write(pipeline.sweep_tsv(results))
        elif args.command == "verify":
            from .verify import run_checks

            text, ok = pipeline.verify_report(run_checks())
            sys.stdout.write(text)
            return 0 if ok else 1
        elif args.command == "synth":
            from .synthetic import make_blobs, make_fraud_like

            if args.kind == "blobs":
                d = make_blobs(args.n, args.prevalence, args.dim, seed=args.seed)
            else:
                d = make_fraud_like(args.n, args.prevalence, args.dim, seed=args.seed)
            data_mod.save_csv(d, args.out)
    except (SvgpError, OSError, ValueError) as exc:
        print(f"svgp-fraud {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
