"""Candidate cropping and dual-path dynamic patch selection.

Every source image contributes exactly one selected patch. Images whose
foreground occupancy is below their class threshold are cropped: k
candidate rectangles are drawn (area fraction uniform in [0.3, 1.0],
aspect ratio uniform in [3/4, 4/3], position uniform over valid corners)
and the candidate with the highest realism score wins, ties going to the
lowest draw index. Images at or above the threshold skip cropping and are
resized whole.

All candidate geometry is drawn from a per-image substream, so selection
is reproducible regardless of worker count or processing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateImage
from .raster import crop, resize  # noqa: F401  (resize is part of this module's API)
from .scoring import ScorerHandle, score_patch

DEFAULT_AREA = (0.3, 1.0)
DEFAULT_ASPECT = (0.75, 4.0 / 3.0)


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned rectangle, top-left origin."""

    x: int
    y: int
    w: int
    h: int

    def validate_within(self, width: int, height: int) -> None:
        if (self.x < 0 or self.y < 0 or self.w < 1 or self.h < 1
                or self.x + self.w > width or self.y + self.h > height):
            raise ConfigError(f"{self} does not fit a {width}x{height} image")


@dataclass(frozen=True)
class PatchCandidate:
    image_id: str
    rect: CropRect
    pixels: np.ndarray  # square raster, side s_patch
    index: int


@dataclass(frozen=True)
class SelectedPatch:
    image_id: str
    class_id: int
    source: str  # "cropped" or "resized"
    rect: CropRect
    score: float
    pixels: np.ndarray  # square raster, side s_patch


def sample_crop_rect(rng: np.random.Generator, width: int, height: int,
                     area: tuple[float, float], aspect: tuple[float, float]) -> CropRect:
    """Draw one crop rectangle. Draw order is fixed: area, aspect, x, y."""
    a = rng.uniform(area[0], area[1])
    rho = rng.uniform(aspect[0], aspect[1])
    target = a * width * height
    w = int(round((target * rho) ** 0.5))
    h = int(round((target / rho) ** 0.5))
    w = min(max(w, 1), width)
    h = min(max(h, 1), height)
    x = int(rng.integers(0, width - w + 1))
    y = int(rng.integers(0, height - h + 1))
    return CropRect(x=x, y=y, w=w, h=h)


def crop_candidates(image: np.ndarray, k: int, rng_stream: np.random.Generator,
                    s_patch: int = 64,
                    area: tuple[float, float] = DEFAULT_AREA,
                    aspect: tuple[float, float] = DEFAULT_ASPECT,
                    image_id: str = "") -> list[PatchCandidate]:
    """Draw k candidate patches, each resized to s_patch x s_patch."""
    if k < 1:
        raise ConfigError(f"candidate count k must be >= 1, got {k}")
    h, w = image.shape[:2]
    if h < 2 or w < 2:
        raise DegenerateImage(f"{image_id or 'image'} is {w}x{h}, need at least 2x2")
    candidates = []
    for index in range(k):
        rect = sample_crop_rect(rng_stream, w, h, area, aspect)
        pixels = resize(crop(image, rect.x, rect.y, rect.w, rect.h), s_patch)
        candidates.append(
            PatchCandidate(image_id=image_id, rect=rect, pixels=pixels, index=index)
        )
    return candidates


def select_dynamic(image: np.ndarray, ratio: float, threshold: float, k: int,
                   scorer: ScorerHandle, true_class: int,
                   rng_stream: np.random.Generator,
                   s_patch: int = 64,
                   area: tuple[float, float] = DEFAULT_AREA,
                   aspect: tuple[float, float] = DEFAULT_ASPECT,
                   mask=None, image_id: str = "",
                   class_id: int | None = None) -> SelectedPatch:
    """Choose the patch for one image via the crop/resize dual path.

    ratio < threshold: crop path, argmax realism score over k candidates.
    ratio >= threshold: the whole image resized to s_patch (the boundary
    case resizes). The resized patch is scored as well so downstream
    ranking treats both paths uniformly.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"occupancy ratio must lie in [0, 1], got {ratio}")
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1], got {threshold}")
    h, w = image.shape[:2]
    cid = true_class if class_id is None else class_id

    if ratio < threshold:
        candidates = crop_candidates(
            image, k, rng_stream, s_patch=s_patch, area=area, aspect=aspect,
            image_id=image_id,
        )
        best: PatchCandidate | None = None
        best_score = -1.0
        for cand in candidates:
            score = score_patch(scorer, cand.pixels, true_class, rect=cand.rect, mask=mask)
            if best is None or score > best_score:
                best, best_score = cand, score
        assert best is not None
        return SelectedPatch(
            image_id=image_id, class_id=cid, source="cropped",
            rect=best.rect, score=best_score, pixels=best.pixels,
        )

    full_rect = CropRect(x=0, y=0, w=w, h=h)
    pixels = resize(image, s_patch)
    score = score_patch(scorer, pixels, true_class, rect=full_rect, mask=mask)
    return SelectedPatch(
        image_id=image_id, class_id=cid, source="resized",
        rect=full_rect, score=score, pixels=pixels,
    )
