from __future__ import annotations

import numpy as np
import pytest

from patchstill.raster import resize
from patchstill.rng import substream
from patchstill.scoring import ScorerHandle
from patchstill.selection import CropRect, SelectedPatch
from patchstill.softlabel import label_crops, labels_json_payload, soft_label
from patchstill.synthesis import DistilledImage, SynthesisPlan, synth


def _distilled(side=16, seed=0):
    rng = np.random.default_rng(seed)
    plan = SynthesisPlan(Z=4, n_ipc=1, cell_side=side // 2)
    group = [
        SelectedPatch(image_id=f"m{i}", class_id=0, source="cropped",
                      rect=CropRect(0, 0, 8, 8), score=1.0,
                      pixels=rng.integers(0, 256, (side // 2, side // 2, 3)).astype(np.uint8))
        for i in range(4)
    ]
    return synth(group, plan)


def test_label_crops_degenerate_full_area_is_resized_image():
    image = _distilled()
    crops = label_crops(image, 1, substream(0, "label", "d"),
                        input_side=8, area=(1.0, 1.0), aspect=(1.0, 1.0))
    assert len(crops) == 1
    assert np.array_equal(crops[0], resize(image.pixels, 8))


def test_label_crops_deterministic_per_seed():
    image = _distilled(seed=3)
    a = label_crops(image, 5, substream(4, "label", "d"), input_side=8)
    b = label_crops(image, 5, substream(4, "label", "d"), input_side=8)
    for ca, cb in zip(a, b):
        assert np.array_equal(ca, cb)


def test_label_crop_area_distribution():
    rng = substream(9, "label", "mc")
    from patchstill.selection import sample_crop_rect
    fracs = []
    for _ in range(10_000):
        rect = sample_crop_rect(rng, 64, 64, (0.4, 1.0), (0.75, 4.0 / 3.0))
        fracs.append(rect.w * rect.h / 4096)
    assert abs(float(np.mean(fracs)) - 0.7) <= 0.02


def test_soft_label_mean_of_two_known_outputs():
    outputs = iter([np.array([0.8, 0.2]), np.array([0.6, 0.4])])
    teacher = ScorerHandle(kind="mock", class_count=2,
                           mock_predict=lambda p: next(outputs))
    crops = [np.zeros((4, 4, 3), dtype=np.uint8)] * 2
    label = soft_label(teacher, crops, 0, distilled_id="d")
    assert np.allclose(label.probs, [0.7, 0.3], atol=1e-12)


def test_soft_label_uniform_teacher_any_M():
    teacher = ScorerHandle(kind="mock", class_count=4,
                           mock_predict=lambda p: np.full(4, 0.25))
    for m in (1, 3, 7):
        crops = [np.zeros((4, 4, 3), dtype=np.uint8)] * m
        label = soft_label(teacher, crops, 1, distilled_id="d")
        assert np.allclose(label.probs, 0.25, atol=1e-15)


def test_soft_label_sums_to_one_and_nonnegative():
    rng = np.random.default_rng(6)

    def noisy(p):
        raw = rng.random(5)
        return raw / raw.sum()

    teacher = ScorerHandle(kind="mock", class_count=5, mock_predict=noisy)
    crops = [np.zeros((4, 4, 3), dtype=np.uint8)] * 9
    label = soft_label(teacher, crops, 2, distilled_id="d")
    assert label.probs.sum() == pytest.approx(1.0, abs=1e-6)
    assert (label.probs >= 0).all()


def test_soft_label_exactly_invariant_to_crop_order():
    # distinct crops so predictions differ; mean must not depend on order
    rng = np.random.default_rng(8)
    crops = [rng.integers(0, 256, (6, 6, 3)).astype(np.uint8) for _ in range(7)]

    def content_dist(p):
        raw = p.mean(axis=(0, 1)).astype(np.float64) + 1.0
        return raw / raw.sum()

    teacher = ScorerHandle(kind="mock", class_count=3, mock_predict=content_dist)
    forward = soft_label(teacher, crops, 0, distilled_id="d").probs
    backward = soft_label(teacher, list(reversed(crops)), 0, distilled_id="d").probs
    shuffled = crops.copy()
    np.random.default_rng(1).shuffle(shuffled)
    mixed = soft_label(teacher, shuffled, 0, distilled_id="d").probs
    assert np.array_equal(forward, backward)
    assert np.array_equal(forward, mixed)


def test_soft_label_permutation_equivariance():
    rng = np.random.default_rng(10)
    crops = [rng.integers(0, 256, (6, 6, 3)).astype(np.uint8) for _ in range(4)]
    perm = np.array([2, 0, 1])

    def base(p):
        raw = p.mean(axis=(0, 1)).astype(np.float64) + 1.0
        return raw / raw.sum()

    plain = ScorerHandle(kind="mock", class_count=3, mock_predict=base)
    permuted = ScorerHandle(kind="mock", class_count=3,
                            mock_predict=lambda p: base(p)[perm])
    a = soft_label(plain, crops, 0, distilled_id="d").probs
    b = soft_label(permuted, crops, 0, distilled_id="d").probs
    assert np.allclose(a[perm], b, atol=1e-15)


def test_mock_teacher_on_composite_matches_hand_enumeration():
    # one-hot on the majority-intensity stripe: enumerate crops by hand
    image = _distilled(seed=5)

    def one_hot_majority(p):
        thirds = np.array_split(p.mean(axis=(1, 2)), 3)
        means = [float(t.mean()) for t in thirds]
        out = np.zeros(3)
        out[int(np.argmax(means))] = 1.0
        return out

    teacher = ScorerHandle(kind="mock", class_count=3, mock_predict=one_hot_majority)
    crops = label_crops(image, 4, substream(2, "label", "d"), input_side=9)
    label = soft_label(teacher, crops, 0, distilled_id="d")
    expected = np.zeros(3)
    for c in crops:
        expected += one_hot_majority(c)
    expected /= 4
    assert np.allclose(label.probs, expected, atol=1e-15)


def test_labels_json_payload_eight_significant_digits():
    label_rows = labels_json_payload([
        type("L", (), {"distilled_id": "a/d_0", "class_id": 1,
                       "probs": np.array([1 / 3, 2 / 3])})()
    ])
    assert label_rows == [
        {"distilled_id": "a/d_0", "class_id": 1, "probs": [0.33333333, 0.66666667]}
    ]
