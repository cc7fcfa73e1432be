from __future__ import annotations

import numpy as np
import pytest

from patchstill.errors import (
    ConfigError,
    GroupSizeMismatch,
    InsufficientPatches,
    LengthNotDivisible,
)
from patchstill.selection import CropRect, SelectedPatch
from patchstill.synthesis import DistilledImage, SynthesisPlan, partition, synth, top_k


def _patch(image_id, score, side=4, color=None, class_id=0):
    rng = np.random.default_rng(abs(hash(image_id)) % (2**32))
    if color is None:
        pixels = rng.integers(0, 256, (side, side, 3)).astype(np.uint8)
    else:
        pixels = np.full((side, side, 3), color, dtype=np.uint8)
    return SelectedPatch(image_id=image_id, class_id=class_id, source="cropped",
                         rect=CropRect(0, 0, side, side), score=score, pixels=pixels)


# -- SynthesisPlan ---------------------------------------------------------

def test_plan_requires_perfect_square():
    with pytest.raises(ConfigError):
        SynthesisPlan(Z=3, n_ipc=1, cell_side=4)
    for z, grid in ((1, 1), (4, 2), (9, 3), (16, 4)):
        plan = SynthesisPlan(Z=z, n_ipc=2, cell_side=4)
        assert plan.grid_dim == grid
        assert plan.distilled_side == grid * 4


def test_plan_from_distilled_side_divisibility():
    plan = SynthesisPlan.from_distilled_side(4, 10, 64)
    assert plan.cell_side == 32
    with pytest.raises(ConfigError):
        SynthesisPlan.from_distilled_side(4, 10, 63)


def test_k_select_product():
    assert SynthesisPlan(Z=4, n_ipc=10, cell_side=4).k_select == 40


# -- top_k -------------------------------------------------------------------

def test_top_k_sorts_by_score():
    plan = SynthesisPlan(Z=1, n_ipc=2, cell_side=4)
    patches = [_patch("a", 0.9), _patch("b", 0.1), _patch("c", 0.5), _patch("d", 0.7)]
    ranked = top_k(patches, plan)
    assert [p.image_id for p in ranked] == ["a", "d"]


def test_top_k_matches_full_sort_oracle():
    plan = SynthesisPlan(Z=4, n_ipc=10, cell_side=4)
    rng = np.random.default_rng(17)
    patches = [_patch(f"p{i:03d}", float(rng.random())) for i in range(100)]
    ranked = top_k(patches, plan)
    oracle = sorted(patches, key=lambda p: (-p.score, p.image_id))[:40]
    assert [p.image_id for p in ranked] == [p.image_id for p in oracle]
    scores = [p.score for p in ranked]
    assert scores == sorted(scores, reverse=True)


def test_top_k_tie_breaks_by_image_id():
    plan = SynthesisPlan(Z=1, n_ipc=2, cell_side=4)
    patches = [_patch("zz", 0.5), _patch("aa", 0.5), _patch("mm", 0.5)]
    ranked = top_k(patches, plan)
    assert [p.image_id for p in ranked] == ["aa", "mm"]


def test_top_k_insufficient_raises():
    plan = SynthesisPlan(Z=4, n_ipc=2, cell_side=4)
    with pytest.raises(InsufficientPatches):
        top_k([_patch("a", 0.5)], plan)


def test_top_k_allow_duplicates_cycles():
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=4)
    patches = [_patch("a", 0.9), _patch("b", 0.3)]
    ranked = top_k(patches, plan, allow_duplicates=True)
    assert [p.image_id for p in ranked] == ["a", "b", "a", "b"]


def test_top_k_rejects_mixed_classes():
    plan = SynthesisPlan(Z=1, n_ipc=1, cell_side=4)
    with pytest.raises(ConfigError):
        top_k([_patch("a", 0.5, class_id=0), _patch("b", 0.5, class_id=1)], plan)


# -- partition ------------------------------------------------------------------

def test_partition_chunks_in_rank_order():
    patches = [_patch(f"p{i}", 1.0 - i * 0.1) for i in range(8)]
    groups = partition(patches, 4)
    assert len(groups) == 2
    assert [p.image_id for p in groups[0]] == ["p0", "p1", "p2", "p3"]
    assert [p.image_id for p in groups[1]] == ["p4", "p5", "p6", "p7"]


def test_partition_z1_is_singletons():
    patches = [_patch(f"p{i}", 0.5) for i in range(5)]
    groups = partition(patches, 1)
    assert [len(g) for g in groups] == [1] * 5
    assert [g[0].image_id for g in groups] == [f"p{i}" for i in range(5)]


def test_partition_index_arithmetic():
    patches = [_patch(f"p{i:02d}", 1.0) for i in range(40)]
    groups = partition(patches, 4)
    for g, group in enumerate(groups):
        assert [p.image_id for p in group] == [f"p{4 * g + j:02d}" for j in range(4)]


def test_partition_rejects_nondivisible():
    with pytest.raises(LengthNotDivisible):
        partition([_patch("a", 1.0)] * 5, 4)


# -- synth -------------------------------------------------------------------------

def test_synth_solid_blocks_row_major():
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=2)
    colors = [(255, 0, 0), (0, 255, 0), (0, 0, 255), (255, 255, 255)]
    group = [_patch(f"c{i}", 1.0, side=2, color=c) for i, c in enumerate(colors)]
    image = synth(group, plan)
    assert image.pixels.shape == (4, 4, 3)
    assert np.all(image.pixels[0:2, 0:2] == colors[0])
    assert np.all(image.pixels[0:2, 2:4] == colors[1])
    assert np.all(image.pixels[2:4, 0:2] == colors[2])
    assert np.all(image.pixels[2:4, 2:4] == colors[3])


def test_synth_z1_identity():
    plan = SynthesisPlan(Z=1, n_ipc=1, cell_side=6)
    member = _patch("solo", 1.0, side=6)
    image = synth([member], plan)
    assert np.array_equal(image.pixels, member.pixels)


def test_synth_every_cell_byte_equals_member():
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=5)
    group = [_patch(f"m{i}", 1.0, side=5) for i in range(4)]
    image = synth(group, plan, index=3)
    assert image.index == 3
    side = plan.cell_side
    for j, member in enumerate(group):
        r, c = divmod(j, plan.grid_dim)
        cell = image.pixels[r * side : (r + 1) * side, c * side : (c + 1) * side]
        assert np.array_equal(cell, member.pixels)


def test_synth_resizes_members_at_other_side():
    plan = SynthesisPlan(Z=1, n_ipc=1, cell_side=3)
    member = _patch("big", 1.0, side=6)
    image = synth([member], plan)
    from patchstill.raster import resize
    assert np.array_equal(image.pixels, resize(member.pixels, 3))


def test_synth_group_size_mismatch():
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=2)
    with pytest.raises(GroupSizeMismatch):
        synth([_patch("a", 1.0, side=2)], plan)


def test_synth_pixel_bijection():
    # every output pixel appears in exactly one member cell, no blending
    plan = SynthesisPlan(Z=9, n_ipc=1, cell_side=3)
    group = [_patch(f"m{i}", 1.0, side=3) for i in range(9)]
    image = synth(group, plan)
    reassembled = np.zeros_like(image.pixels)
    for j, member in enumerate(group):
        r, c = divmod(j, 3)
        reassembled[r * 3 : (r + 1) * 3, c * 3 : (c + 1) * 3] = member.pixels
    assert np.array_equal(image.pixels, reassembled)


def test_distilled_image_members_in_rank_order():
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=2)
    ranked = top_k([_patch(f"p{i}", 1.0 - 0.1 * i, side=2) for i in range(4)], plan)
    image = synth(ranked, plan)
    assert isinstance(image, DistilledImage)
    assert [m.image_id for m in image.members] == ["p0", "p1", "p2", "p3"]
