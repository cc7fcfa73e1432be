"""Low-level raster primitives.

A raster is a numpy array of shape (H, W, 3), dtype uint8, RGB channel
order. All geometry in the pipeline is expressed in (x, y, w, h) pixel
rectangles with the origin at the top-left corner.

The bilinear resampler here is the single resize implementation used by
every stage (candidate patches, the resize selection path, grid cells,
model input preparation). It uses half-pixel center alignment with edge
replication and rounds half up, so fixed inputs produce byte-identical
outputs on every run and worker count.
"""

from __future__ import annotations

import numpy as np

from .errors import RectOutOfBounds


def validate_raster(pixels: np.ndarray) -> np.ndarray:
    if not isinstance(pixels, np.ndarray):
        raise TypeError("raster must be a numpy array")
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"raster must have shape (H, W, 3), got {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise ValueError(f"raster must be uint8, got {pixels.dtype}")
    if pixels.shape[0] < 1 or pixels.shape[1] < 1:
        raise ValueError("raster must be at least 1x1")
    return pixels


def resize(image: np.ndarray, side: int) -> np.ndarray:
    """Bilinearly resample ``image`` to ``side`` x ``side``.

    Output pixel (i, j) samples the source at
    ((j + 0.5) * W/side - 0.5, (i + 0.5) * H/side - 0.5); coordinates
    outside the source are edge-replicated. Values are accumulated in
    float64 and rounded half up, so resizing an image to its own size is
    an exact copy.
    """
    validate_raster(image)
    if side < 1:
        raise ValueError("resize side must be >= 1")
    h, w = image.shape[:2]
    if h == side and w == side:
        return image.copy()

    ys = (np.arange(side, dtype=np.float64) + 0.5) * (h / side) - 0.5
    xs = (np.arange(side, dtype=np.float64) + 0.5) * (w / side) - 0.5
    y0f = np.floor(ys)
    x0f = np.floor(xs)
    wy = (ys - y0f)[:, None, None]
    wx = (xs - x0f)[None, :, None]
    y0 = np.clip(y0f.astype(np.int64), 0, h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, h - 1)
    x0 = np.clip(x0f.astype(np.int64), 0, w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, w - 1)

    img = image.astype(np.float64)
    top = img[y0[:, None], x0[None, :]] * (1.0 - wx) + img[y0[:, None], x1[None, :]] * wx
    bot = img[y1[:, None], x0[None, :]] * (1.0 - wx) + img[y1[:, None], x1[None, :]] * wx
    out = top * (1.0 - wy) + bot * wy
    return np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)


def crop(image: np.ndarray, x: int, y: int, w: int, h: int) -> np.ndarray:
    """Extract the (x, y, w, h) sub-raster; raises if it leaves the image."""
    ih, iw = image.shape[:2]
    if x < 0 or y < 0 or w < 1 or h < 1 or x + w > iw or y + h > ih:
        raise RectOutOfBounds(
            f"rect x={x} y={y} w={w} h={h} outside {iw}x{ih} raster"
        )
    return image[y : y + h, x : x + w]
