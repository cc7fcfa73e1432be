"""Foreground masks, occupancy ratios, and per-class decision thresholds.

The occupancy ratio of an image is the fraction of its pixels covered by
the foreground mask. Per class, the decision threshold is a sample
quantile (linear interpolation on the sorted ratios) of the class's
occupancy distribution: images at or above the threshold are resized
whole, images below it go through candidate cropping.

Masks are produced outside this package (typically by a promptable
segmenter) and ingested as 8-bit grayscale PNGs mirroring the dataset
layout: ``masks_root/<class_name>/<image>.png``, nonzero = foreground,
multiple instances pre-unioned into one file.
"""

from __future__ import annotations

import math
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ConfigError,
    EmptyClass,
    MaskDimensionMismatch,
    MaskMissing,
    SegmenterFailed,
)
from .ingest import ImageRecord


@dataclass(frozen=True)
class Mask:
    """Binary foreground map paired with one image; bits hold 0 or 1."""

    image_id: str
    bits: np.ndarray  # (H, W) uint8 in {0, 1}

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class OccupancyStats:
    image_id: str
    ratio: float


@dataclass(frozen=True)
class ClassThreshold:
    class_id: int
    name: str
    quantile: float
    threshold: float
    count: int


def mask_path_for(masks_root: str | Path, record: ImageRecord) -> Path:
    """Mask file mirroring the dataset layout, always with a .png suffix."""
    class_name, filename = record.image_id.split("/", 1)
    stem = Path(filename).stem
    return Path(masks_root) / class_name / f"{stem}.png"


def load_mask(path: str | Path, record: ImageRecord) -> Mask:
    """Read a grayscale mask PNG and binarize it (value > 0 maps to 1)."""
    path = Path(path)
    if not path.is_file():
        raise MaskMissing(f"no mask for {record.image_id} at {path}")
    try:
        with Image.open(path) as img:
            gray = np.asarray(img.convert("L"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise MaskMissing(f"unreadable mask for {record.image_id} at {path}: {exc}") from exc
    h, w = gray.shape
    if w != record.width or h != record.height:
        raise MaskDimensionMismatch(
            f"{record.image_id}: mask is {w}x{h}, image is {record.width}x{record.height}"
        )
    return Mask(image_id=record.image_id, bits=(gray > 0).astype(np.uint8))


def occupancy(mask: Mask) -> OccupancyStats:
    """Foreground pixel count over total pixel count, one exact division."""
    count = int(np.count_nonzero(mask.bits))
    area = mask.bits.shape[0] * mask.bits.shape[1]
    return OccupancyStats(image_id=mask.image_id, ratio=count / area)


def class_threshold(ratios: list[float], quantile: float) -> float:
    """Linear-interpolation sample quantile of the occupancy ratios.

    With sorted values v_0..v_{m-1} and position p = quantile * (m - 1),
    returns v_floor(p) + frac(p) * (v_ceil(p) - v_floor(p)). The result is
    clamped into [v_floor(p), v_ceil(p)] so the threshold is exactly
    monotone in the quantile despite floating-point rounding.
    """
    if len(ratios) == 0:
        raise EmptyClass("cannot take a quantile of an empty ratio list")
    if not 0.0 <= quantile <= 1.0:
        raise ConfigError(f"quantile must lie in [0, 1], got {quantile}")
    values = sorted(float(r) for r in ratios)
    p = quantile * (len(values) - 1)
    lo = math.floor(p)
    hi = math.ceil(p)
    raw = values[lo] + (p - lo) * (values[hi] - values[lo])
    return min(max(raw, values[lo]), values[hi])


def run_segmenter_adapter(command_template: str, image_path: str | Path,
                          prompt: str, out_path: str | Path) -> Path:
    """Spawn an external segmenter to produce one mask file.

    ``command_template`` is split on whitespace before substitution, so a
    prompt containing spaces stays a single argument. It must reference
    all three placeholders ``{image}``, ``{prompt}`` and ``{out}``.
    """
    for placeholder in ("{image}", "{prompt}", "{out}"):
        if placeholder not in command_template:
            raise ConfigError(f"segmenter command template lacks {placeholder}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    argv = [
        token.format(image=str(image_path), prompt=prompt, out=str(out_path))
        for token in command_template.split()
    ]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise SegmenterFailed(
            f"segmenter exited {proc.returncode} for {image_path}", stderr=proc.stderr
        )
    if not out_path.is_file():
        raise MaskMissing(f"segmenter succeeded but wrote no mask at {out_path}")
    return out_path


def occupancy_csv(stats: list[OccupancyStats], class_ids: dict[str, int]) -> str:
    """CSV export ``image_id,class_id,ratio`` with 6-decimal ratios."""
    lines = ["image_id,class_id,ratio"]
    for s in stats:
        lines.append(f"{s.image_id},{class_ids[s.image_id]},{s.ratio:.6f}")
    return "\n".join(lines) + "\n"


def thresholds_json_payload(thresholds: list[ClassThreshold]) -> list[dict]:
    return [
        {
            "class_id": t.class_id,
            "name": t.name,
            "quantile": t.quantile,
            "threshold": t.threshold,
            "count": t.count,
        }
        for t in thresholds
    ]
