"""Command-line entry point.

Subcommands: analyze, distill, report, sweep. Every run takes one JSON
config file; individual flags override file values, and the environment
variable PATCHSTILL_SEED overrides the file seed (flags beat both).

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 inference error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import load_config
from .errors import ConfigError, PatchstillError
from .pipeline import run_analyze, run_distill, run_report, run_sweep

DEFAULT_SWEEP = [round(0.1 * i, 1) for i in range(1, 10)]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchstill",
        description="Foreground-aware dataset distillation via dynamic patch selection",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--dataset-root", help="override dataset_root")
        p.add_argument("--masks-root", help="override masks_root")
        p.add_argument("--out-dir", help="override out_dir")
        p.add_argument("--seed", type=int, help="override seed (beats PATCHSTILL_SEED)")
        p.add_argument("--quantile", type=float, help="override quantile")
        p.add_argument("--workers", type=int, help="override worker count")
        p.add_argument("--skip-bad-images", action="store_true", default=None,
                       help="log and drop undecodable or maskless images")

    p_analyze = sub.add_parser("analyze", help="occupancy stats, thresholds, histograms")
    add_common(p_analyze)

    p_distill = sub.add_parser("distill", help="build the distilled dataset")
    add_common(p_distill)
    p_distill.add_argument("--n-ipc", type=int, help="override n_ipc")
    p_distill.add_argument("--z", type=int, help="override Z")
    p_distill.add_argument("--allow-duplicates", action="store_true", default=None,
                           help="cycle ranked patches when a class is short")

    p_report = sub.add_parser("report", help="histograms plus retention diagnostic")
    add_common(p_report)

    p_sweep = sub.add_parser("sweep", help="quantile sweep table")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--quantiles",
        help="comma-separated quantiles (default 0.1..0.9 in steps of 0.1)",
    )
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    mapping = {
        "dataset_root": args.dataset_root,
        "masks_root": args.masks_root,
        "out_dir": args.out_dir,
        "quantile": args.quantile,
        "workers": args.workers,
        "skip_bad_images": args.skip_bad_images,
        "n_ipc": getattr(args, "n_ipc", None),
        "Z": getattr(args, "z", None),
        "allow_duplicates": getattr(args, "allow_duplicates", None),
    }
    seed = args.seed
    if seed is None and "PATCHSTILL_SEED" in os.environ:
        try:
            seed = int(os.environ["PATCHSTILL_SEED"])
        except ValueError as exc:
            raise ConfigError(f"PATCHSTILL_SEED is not an integer: {exc}") from exc
    mapping["seed"] = seed
    return {k: v for k, v in mapping.items() if v is not None}


def _parse_quantiles(text: str | None) -> list[float]:
    if not text:
        return list(DEFAULT_SWEEP)
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --quantiles value: {exc}") from exc
    if not values:
        raise ConfigError("--quantiles parsed to an empty list")
    for q in values:
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"quantile {q} outside [0, 1]")
    return values


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; we map to 1
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, _overrides(args))
        for key in ("dataset_root", "masks_root", "out_dir"):
            if getattr(cfg, key) is None:
                raise ConfigError(f"{key} must be set in the config or by flag")
        if args.command == "analyze":
            run_analyze(cfg)
        elif args.command == "distill":
            run_distill(cfg)
        elif args.command == "report":
            run_report(cfg)
        elif args.command == "sweep":
            run_sweep(cfg, _parse_quantiles(args.quantiles))
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command}")
    except PatchstillError as exc:
        log_name = type(exc).__name__
        print(f"patchstill: {log_name}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
