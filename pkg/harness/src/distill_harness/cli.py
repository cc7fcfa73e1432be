"""Harness command line: data generation, masks, export, training, ablations."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .evaluate import EvalRunSpec, train_eval
from .experiments import quantile_sweep, write_results_csv, z_trend
from .export import export_models
from .masks import gen_masks
from .shapes import gen_split


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distill-harness",
        description="Desk-scale evaluation harness for the distillation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="synthetic ellipse dataset + analytic masks")
    p.add_argument("--root", required=True)
    p.add_argument("--masks-root", required=True)
    p.add_argument("--per-class", type=int, default=60)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sparse-frac", type=float, default=0.30)

    p = sub.add_parser("gen-masks", help="segment a dataset tree into masks")
    p.add_argument("--dataset-root", required=True)
    p.add_argument("--masks-root", required=True)
    p.add_argument("--threshold", type=float, default=90)

    p = sub.add_parser("export-model", help="train on originals, export TorchScript")
    p.add_argument("--train-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=60)

    p = sub.add_parser("train-eval", help="train students on distilled data")
    p.add_argument("--distilled-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seeds", default="0,1,2")

    p = sub.add_parser("z-trend", help="patch-count ablation (Z in 1,4,16)")
    p.add_argument("--workdir", required=True)

    p = sub.add_parser("sweep", help="decision-quantile ablation (0.1..0.9)")
    p.add_argument("--workdir", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "gen-data":
        gen_split(args.root, args.masks_root, args.per_class, args.seed,
                  sparse_frac=args.sparse_frac)
    elif args.command == "gen-masks":
        gen_masks(args.dataset_root, args.masks_root, threshold=args.threshold)
    elif args.command == "export-model":
        path, train_acc = export_models(args.train_dir, args.out, seed=args.seed,
                                        epochs=args.epochs)
        print(f"exported {path} (train acc {train_acc:.3f})")
    elif args.command == "train-eval":
        seeds = tuple(int(s) for s in args.seeds.split(","))
        distilled = Path(args.distilled_dir)
        spec = EvalRunSpec(distilled_dir=distilled, labels=distilled / "labels.json",
                           test_dir=Path(args.test_dir), epochs=args.epochs,
                           seeds=seeds)
        result = train_eval(spec)
        print(f"accuracy {result.mean_accuracy:.4f} +/- {result.std_accuracy:.4f} "
              f"over seeds {seeds}")
    elif args.command == "z-trend":
        result = z_trend(args.workdir)
        write_results_csv(Path(args.workdir) / "results.csv", result.rows)
    elif args.command == "sweep":
        result = quantile_sweep(args.workdir)
        write_results_csv(Path(args.workdir) / "results.csv", result.rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
