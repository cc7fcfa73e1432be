"""Class-agnostic mask generation for synthetic datasets.

A color-separation segmenter: the background color is estimated from the
median of the image border, and any pixel whose channel-wise distance
from it exceeds a threshold counts as foreground. On the shapes datasets
this recovers the analytic masks almost exactly (clutter and noise stay
below the threshold, the foreground color far above it). Prompts are
accepted for interface parity with promptable segmenters and recorded per
class, falling back to the class name when missing.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_THRESHOLD = 90


def resolve_prompts(class_names: list[str],
                    prompts: dict[str, str] | None) -> dict[str, str]:
    """Per-class prompt with fallback to the class name."""
    prompts = prompts or {}
    return {name: prompts.get(name, name) for name in class_names}


def segment_image(pixels: np.ndarray, prompt: str = "",
                  threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Binary foreground map; the prompt is unused by this segmenter."""
    img = pixels.astype(np.float64)
    border = np.concatenate([
        img[0, :].reshape(-1, 3), img[-1, :].reshape(-1, 3),
        img[:, 0].reshape(-1, 3), img[:, -1].reshape(-1, 3),
    ])
    background = np.median(border, axis=0)
    distance = np.abs(img - background).max(axis=2)
    return (distance > threshold).astype(np.uint8)


def gen_masks(dataset_root: str | Path, masks_root: str | Path,
              prompts: dict[str, str] | None = None,
              threshold: float = DEFAULT_THRESHOLD) -> dict[str, str]:
    """Write a mask tree mirroring the dataset layout; returns used prompts."""
    dataset_root, masks_root = Path(dataset_root), Path(masks_root)
    class_dirs = sorted(d for d in dataset_root.iterdir() if d.is_dir())
    if not class_dirs:
        raise ValueError(f"no class directories under {dataset_root}")
    used = resolve_prompts([d.name for d in class_dirs], prompts)
    for class_dir in class_dirs:
        out_dir = masks_root / class_dir.name
        out_dir.mkdir(parents=True, exist_ok=True)
        for img_path in sorted(class_dir.glob("*.png")):
            pixels = np.asarray(Image.open(img_path).convert("RGB"), dtype=np.uint8)
            mask = segment_image(pixels, used[class_dir.name], threshold)
            Image.fromarray(mask * 255, mode="L").save(out_dir / img_path.name)
    (masks_root / "prompts_used.json").write_text(
        json.dumps(used, indent=2) + "\n", encoding="utf-8")
    return used


def iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.logical_and(a > 0, b > 0).sum())
    union = int(np.logical_or(a > 0, b > 0).sum())
    return 1.0 if union == 0 else inter / union
