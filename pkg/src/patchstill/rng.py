"""Deterministic per-item random substreams.

Every randomized step draws from a generator derived solely from
(global seed, purpose tag, item id). Worker scheduling and processing
order therefore cannot change any draw. Purpose tags keep streams for
different stages (candidate cropping, label cropping, policy baselines)
statistically independent even for the same item id.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, purpose: str, key: str) -> np.random.Generator:
    """Return a PCG64 generator unique to (seed, purpose, key)."""
    digest = hashlib.sha256(f"{purpose}:{key}".encode("utf-8")).digest()
    words = struct.unpack("<4I", digest[:16])
    ss = np.random.SeedSequence([seed & _MASK64, *words])
    return np.random.default_rng(ss)
