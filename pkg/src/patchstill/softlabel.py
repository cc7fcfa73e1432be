"""Soft-label synthesis for distilled images.

A distilled image's label is the arithmetic mean of a teacher's predicted
distributions over M random crops of the composite. Crop geometry comes
from a per-distilled-image substream. Before averaging, the M
distributions are sorted per class channel and summed with numpy's
pairwise reduction, so the label is bit-identical under any reordering of
the crops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .raster import crop, resize
from .scoring import TeacherHandle
from .selection import sample_crop_rect
from .synthesis import DistilledImage

DEFAULT_LABEL_AREA = (0.4, 1.0)
DEFAULT_LABEL_ASPECT = (0.75, 4.0 / 3.0)


@dataclass(frozen=True)
class SoftLabel:
    distilled_id: str
    class_id: int
    probs: np.ndarray  # length n, sums to 1 within 1e-6


def label_crops(image: DistilledImage, M: int, rng_stream: np.random.Generator,
                input_side: int = 32,
                area: tuple[float, float] = DEFAULT_LABEL_AREA,
                aspect: tuple[float, float] = DEFAULT_LABEL_ASPECT) -> list[np.ndarray]:
    """Draw M random crops of the composite, resized to the teacher input."""
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    h, w = image.pixels.shape[:2]
    crops = []
    for _ in range(M):
        rect = sample_crop_rect(rng_stream, w, h, area, aspect)
        crops.append(resize(crop(image.pixels, rect.x, rect.y, rect.w, rect.h), input_side))
    return crops


def soft_label(teacher: TeacherHandle, crops: list[np.ndarray], true_class: int,
               distilled_id: str = "") -> SoftLabel:
    """Mean of the teacher's distributions over the crops.

    The per-channel values are sorted before the pairwise sum, making the
    mean exactly invariant to crop order.
    """
    if not crops:
        raise ConfigError("soft_label needs at least one crop")
    preds = np.stack([teacher.predict(c) for c in crops], axis=0)
    ordered = np.sort(preds, axis=0)
    probs = ordered.sum(axis=0) / len(crops)
    return SoftLabel(distilled_id=distilled_id, class_id=true_class, probs=probs)


def labels_json_payload(labels: list[SoftLabel]) -> list[dict]:
    """JSON rows with probabilities at 8 significant digits."""
    return [
        {
            "distilled_id": lab.distilled_id,
            "class_id": lab.class_id,
            "probs": [float(f"{p:.8g}") for p in lab.probs],
        }
        for lab in labels
    ]
