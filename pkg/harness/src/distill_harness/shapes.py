"""Synthetic ellipse dataset with analytically known foreground masks.

Three classes differ only in ellipse aspect ratio (wide, round, tall);
total foreground area bands are shared, so the class cue is the shape's
global proportion rather than its size or color. Each class mixes
foreground-dominant images (large ellipse, possibly clipped by the frame)
with sparse ones (small ellipse over a cluttered background), giving a
bimodal occupancy distribution with a clean gap between the modes.

Backgrounds carry a brightness gradient, low-contrast clutter blobs, and
pixel noise; all of it stays well below the foreground's contrast so a
simple color-separation segmenter can recover the analytic mask.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

SIDE = 32
FG_COLOR = np.array([215, 90, 60], dtype=np.float64)
CLASSES = ("wide", "round", "tall")
ASPECT = {"wide": 1.6, "round": 1.0, "tall": 0.625}
DENSE_OCC = (0.35, 0.45)
SPARSE_OCC = (0.03, 0.07)


def render(kind: str, occ: float, rng: np.random.Generator,
           allow_clip: bool) -> tuple[np.ndarray, np.ndarray]:
    """One image plus its exact foreground mask at the target occupancy."""
    r = (occ * SIDE * SIDE / np.pi) ** 0.5
    s = ASPECT[kind] ** 0.5
    a, b = r * s, r / s
    mx = min(int(np.ceil(a * (0.6 if allow_clip else 1.0))) + 1, SIDE // 2 - 1)
    my = min(int(np.ceil(b * (0.6 if allow_clip else 1.0))) + 1, SIDE // 2 - 1)
    cx = int(rng.integers(mx, SIDE - mx))
    cy = int(rng.integers(my, SIDE - my))
    yy, xx = np.mgrid[0:SIDE, 0:SIDE]
    mask = ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0

    base = rng.uniform(20, 60, size=3)
    gx, gy = rng.uniform(-25, 25, size=2)
    img = np.zeros((SIDE, SIDE, 3))
    img[:] = base
    img += (gx * (xx / SIDE) + gy * (yy / SIDE))[..., None]
    for _ in range(int(rng.integers(8, 15))):
        br = rng.uniform(1.0, 3.0)
        bx, by = rng.uniform(0, SIDE, size=2)
        blob = (xx - bx) ** 2 + (yy - by) ** 2 <= br * br
        blob &= ~mask
        img[blob] += rng.uniform(25, 55, size=3) * rng.choice([-1.0, 1.0], size=3)
    img += rng.normal(0, 6, size=(SIDE, SIDE, 3))
    img[mask] = FG_COLOR + rng.normal(0, 6, size=(int(mask.sum()), 3))
    return np.clip(img, 0, 255).astype(np.uint8), mask.astype(np.uint8)


def gen_split(root: str | Path, masks_root: str | Path, per_class: int,
              seed: int, sparse_frac: float = 0.30) -> None:
    """Write a directory-per-class split and the matching mask tree."""
    rng = np.random.default_rng(seed)
    root, masks_root = Path(root), Path(masks_root)
    for kind in CLASSES:
        (root / kind).mkdir(parents=True, exist_ok=True)
        (masks_root / kind).mkdir(parents=True, exist_ok=True)
        n_sparse = int(round(per_class * sparse_frac))
        for i in range(per_class):
            sparse = i < n_sparse
            occ = rng.uniform(*(SPARSE_OCC if sparse else DENSE_OCC))
            img, mask = render(kind, occ, rng, allow_clip=not sparse)
            Image.fromarray(img).save(root / kind / f"s{i:03d}.png")
            Image.fromarray(mask * 255, mode="L").save(masks_root / kind / f"s{i:03d}.png")


def gen_separable_pair(root: str | Path, per_class: int, seed: int) -> None:
    """Trivially separable 2-class set (color fields) for sanity checks."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    colors = {"crimson": (200, 40, 40), "azure": (40, 80, 200)}
    for name, color in colors.items():
        (root / name).mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            img = np.zeros((SIDE, SIDE, 3))
            img[:] = color
            img += rng.normal(0, 10, size=(SIDE, SIDE, 3))
            Image.fromarray(np.clip(img, 0, 255).astype(np.uint8)).save(
                root / name / f"s{i:03d}.png")
