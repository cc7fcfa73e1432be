"""Ranking, partitioning, and grid compositing of selected patches.

Per class, the Z * n_ipc highest-scoring patches are kept, split into
consecutive rank-order groups of Z, and each group is pasted onto a
square grid (row-major, no blending, no gaps). Z must be a perfect
square so the grid is sqrt(Z) x sqrt(Z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    GroupSizeMismatch,
    InsufficientPatches,
    LengthNotDivisible,
)
from .raster import resize
from .selection import SelectedPatch


@dataclass(frozen=True)
class SynthesisPlan:
    """Layout parameters for one distillation run."""

    Z: int
    n_ipc: int
    cell_side: int

    def __post_init__(self) -> None:
        if self.Z < 1 or math.isqrt(self.Z) ** 2 != self.Z:
            raise ConfigError(f"Z must be a perfect square >= 1, got {self.Z}")
        if self.n_ipc < 1:
            raise ConfigError(f"n_ipc must be >= 1, got {self.n_ipc}")
        if self.cell_side < 1:
            raise ConfigError(f"cell_side must be >= 1, got {self.cell_side}")

    @property
    def grid_dim(self) -> int:
        return math.isqrt(self.Z)

    @property
    def distilled_side(self) -> int:
        return self.grid_dim * self.cell_side

    @property
    def k_select(self) -> int:
        return self.Z * self.n_ipc

    @classmethod
    def from_distilled_side(cls, Z: int, n_ipc: int, distilled_side: int) -> "SynthesisPlan":
        grid = math.isqrt(Z)
        if grid * grid != Z:
            raise ConfigError(f"Z must be a perfect square >= 1, got {Z}")
        if distilled_side % grid != 0:
            raise ConfigError(
                f"distilled_side {distilled_side} not divisible by grid dimension {grid}"
            )
        return cls(Z=Z, n_ipc=n_ipc, cell_side=distilled_side // grid)


@dataclass(frozen=True)
class DistilledImage:
    class_id: int
    index: int
    members: tuple[SelectedPatch, ...]  # in rank order
    pixels: np.ndarray


def top_k(patches: list[SelectedPatch], plan: SynthesisPlan,
          allow_duplicates: bool = False) -> list[SelectedPatch]:
    """Keep the Z * n_ipc best patches, descending score, ties by image_id.

    With ``allow_duplicates`` a short class cycles through its ranked
    patches until the quota is met instead of raising.
    """
    if not patches:
        raise InsufficientPatches("no patches to rank")
    class_ids = {p.class_id for p in patches}
    if len(class_ids) != 1:
        raise ConfigError(f"top_k expects one class, got ids {sorted(class_ids)}")
    ranked = sorted(patches, key=lambda p: (-p.score, p.image_id))
    need = plan.k_select
    if len(ranked) >= need:
        return ranked[:need]
    if not allow_duplicates:
        raise InsufficientPatches(
            f"class {patches[0].class_id} holds {len(ranked)} patches, "
            f"needs {need} (Z={plan.Z} x n_ipc={plan.n_ipc}); "
            "rerun with --allow-duplicates to cycle"
        )
    return [ranked[i % len(ranked)] for i in range(need)]


def partition(ranked: list[SelectedPatch], Z: int) -> list[list[SelectedPatch]]:
    """Consecutive rank-order chunks of size Z."""
    if Z < 1:
        raise ConfigError(f"Z must be >= 1, got {Z}")
    if len(ranked) % Z != 0:
        raise LengthNotDivisible(f"{len(ranked)} patches not divisible by Z={Z}")
    return [ranked[g * Z : (g + 1) * Z] for g in range(len(ranked) // Z)]


def synth(group: list[SelectedPatch], plan: SynthesisPlan, index: int = 0) -> DistilledImage:
    """Composite one group of Z patches onto the fixed row-major grid.

    Member j fills grid cell (j // grid_dim, j % grid_dim); its raster is
    resized to cell_side first when it arrives at a different side, so
    every output cell is byte-equal to its (possibly resized) member.
    """
    if len(group) != plan.Z:
        raise GroupSizeMismatch(f"group holds {len(group)} patches, plan.Z={plan.Z}")
    grid = plan.grid_dim
    side = plan.cell_side
    canvas = np.zeros((grid * side, grid * side, 3), dtype=np.uint8)
    for j, patch in enumerate(group):
        cell = patch.pixels
        if cell.shape[0] != side or cell.shape[1] != side:
            cell = resize(cell, side)
        row, col = j // grid, j % grid
        canvas[row * side : (row + 1) * side, col * side : (col + 1) * side] = cell
    return DistilledImage(
        class_id=group[0].class_id, index=index, members=tuple(group), pixels=canvas
    )
