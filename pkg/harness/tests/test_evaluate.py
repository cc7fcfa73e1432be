from __future__ import annotations

import json

import pytest

from distill_harness.evaluate import EvalRunSpec, train_eval
from distill_harness.shapes import gen_separable_pair


def _fake_distilled(root, per_class=10, seed=5, n_classes=2):
    """Dress a separable class tree up as a distilled output directory."""
    gen_separable_pair(root, per_class=per_class, seed=seed)
    classes = sorted(d.name for d in root.iterdir() if d.is_dir())
    rows = []
    for ci, name in enumerate(classes):
        for p in sorted((root / name).glob("*.png")):
            probs = [0.0] * n_classes
            if ci < n_classes:
                probs[ci] = 1.0
            else:  # pad rows when faking a class-count mismatch
                probs[0] = 1.0
            rows.append({"distilled_id": f"{name}/{p.stem}", "class_id": ci,
                         "probs": probs})
    (root / "labels.json").write_text(json.dumps(rows), encoding="utf-8")
    return root


def test_separable_dataset_trains_above_95_percent(tmp_path):
    distilled = _fake_distilled(tmp_path / "distilled", per_class=10, seed=5)
    gen_separable_pair(tmp_path / "test", per_class=15, seed=6)
    spec = EvalRunSpec(distilled_dir=distilled, labels=distilled / "labels.json",
                       test_dir=tmp_path / "test", epochs=25, seeds=(0, 1, 2))
    result = train_eval(spec)
    assert result.mean_accuracy >= 0.95
    assert len(result.per_seed) == 3


def test_wrong_class_count_in_labels_raises(tmp_path):
    distilled = _fake_distilled(tmp_path / "distilled", per_class=4, seed=5,
                                n_classes=3)
    gen_separable_pair(tmp_path / "test", per_class=4, seed=6)  # 2 classes
    spec = EvalRunSpec(distilled_dir=distilled, labels=distilled / "labels.json",
                       test_dir=tmp_path / "test", epochs=2, seeds=(0, 1, 2))
    with pytest.raises(ValueError, match="classes"):
        train_eval(spec)


def test_fewer_than_three_seeds_rejected(tmp_path):
    with pytest.raises(ValueError, match="3 seeds"):
        EvalRunSpec(distilled_dir=tmp_path, labels=tmp_path / "labels.json",
                    test_dir=tmp_path, seeds=(0,))
