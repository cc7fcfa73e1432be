"""Analysis artifacts: occupancy histograms and foreground retention.

Retention quantifies how much of an image's foreground a selection policy
keeps: foreground pixels inside the selected rectangle over all
foreground pixels (1.0 for an empty mask). Three policies are compared:
``dynamic`` (the dual-path selection), ``random_crop`` (a single random
crop, no scoring), and ``resize_only`` (always the full image).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyClass, RectOutOfBounds
from .foreground import Mask
from .selection import (
    CropRect,
    SelectedPatch,
    sample_crop_rect,
    select_dynamic,
)

POLICIES = ("dynamic", "random_crop", "resize_only")


@dataclass(frozen=True)
class HistogramReport:
    class_id: int
    bin_edges: list[float]  # length bins + 1, uniform over [0, 1]
    fractions: list[float]  # per-bin fraction of class images
    threshold: float


@dataclass(frozen=True)
class RetentionReport:
    policy: str
    mean_retention: float
    per_class: list[float]


def histogram(ratios: list[float], bins: int = 20,
              class_id: int = 0, threshold: float = 0.0) -> HistogramReport:
    """Fraction of images per uniform occupancy bin over [0, 1].

    Bins are left-closed; the last bin also includes 1.0, so fractions
    always sum to 1.
    """
    if not ratios:
        raise EmptyClass("cannot histogram an empty ratio list")
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    counts = [0] * bins
    for r in ratios:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"ratio {r} outside [0, 1]")
        counts[min(int(r * bins), bins - 1)] += 1
    total = len(ratios)
    return HistogramReport(
        class_id=class_id,
        bin_edges=[i / bins for i in range(bins + 1)],
        fractions=[c / total for c in counts],
        threshold=threshold,
    )


def retention(selected: SelectedPatch, mask: Mask) -> float:
    """Foreground pixels inside the selected rect over all foreground pixels."""
    r = selected.rect
    if (r.x < 0 or r.y < 0 or r.w < 1 or r.h < 1
            or r.x + r.w > mask.width or r.y + r.h > mask.height):
        raise RectOutOfBounds(
            f"rect {r} outside {mask.width}x{mask.height} mask for {selected.image_id}"
        )
    total = int(np.count_nonzero(mask.bits))
    if total == 0:
        return 1.0
    inside = int(np.count_nonzero(mask.bits[r.y : r.y + r.h, r.x : r.x + r.w]))
    return inside / total


def policy_select(policy: str, image: np.ndarray, mask: Mask, ratio: float,
                  threshold: float, k: int, scorer, true_class: int,
                  rng_stream: np.random.Generator,
                  s_patch: int = 64,
                  area=(0.3, 1.0), aspect=(0.75, 4.0 / 3.0),
                  image_id: str = "") -> SelectedPatch:
    """Selected patch for one image under the named policy.

    ``random_crop`` draws one rectangle from the same sampler as the crop
    path and takes it unscored; ``resize_only`` always keeps the full
    image. Both baselines exist only for the retention diagnostic.
    """
    h, w = image.shape[:2]
    if policy == "dynamic":
        return select_dynamic(
            image, ratio, threshold, k, scorer, true_class, rng_stream,
            s_patch=s_patch, area=area, aspect=aspect, mask=mask,
            image_id=image_id,
        )
    if policy == "random_crop":
        rect = sample_crop_rect(rng_stream, w, h, area, aspect)
        return SelectedPatch(
            image_id=image_id, class_id=true_class, source="cropped",
            rect=rect, score=0.0, pixels=image[:1, :1],
        )
    if policy == "resize_only":
        return SelectedPatch(
            image_id=image_id, class_id=true_class, source="resized",
            rect=CropRect(0, 0, w, h), score=0.0, pixels=image[:1, :1],
        )
    raise ConfigError(f"unknown policy {policy!r}, expected one of {POLICIES}")


def aggregate_retention(policy: str, per_image: dict[int, list[float]]) -> RetentionReport:
    """Unweighted mean over all images plus per-class means."""
    values = [v for vals in per_image.values() for v in vals]
    if not values:
        raise EmptyClass("no retention values to aggregate")
    per_class = [
        sum(vals) / len(vals) for _, vals in sorted(per_image.items())
    ]
    return RetentionReport(
        policy=policy,
        mean_retention=sum(values) / len(values),
        per_class=per_class,
    )


def histogram_csv(report: HistogramReport) -> str:
    lines = ["bin_lo,bin_hi,fraction"]
    for i, frac in enumerate(report.fractions):
        lines.append(f"{report.bin_edges[i]:.6f},{report.bin_edges[i + 1]:.6f},{frac:.6f}")
    return "\n".join(lines) + "\n"
