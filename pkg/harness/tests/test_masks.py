from __future__ import annotations

import numpy as np
from PIL import Image

from distill_harness.masks import gen_masks, iou, resolve_prompts, segment_image
from distill_harness.shapes import gen_split


def test_generated_masks_match_analytic_ground_truth(tmp_path):
    gen_split(tmp_path / "data", tmp_path / "truth", per_class=12, seed=11)
    gen_masks(tmp_path / "data", tmp_path / "generated")
    scores = []
    for truth_path in sorted((tmp_path / "truth").rglob("*.png")):
        rel = truth_path.relative_to(tmp_path / "truth")
        truth = np.asarray(Image.open(truth_path).convert("L"))
        got = np.asarray(Image.open(tmp_path / "generated" / rel).convert("L"))
        scores.append(iou(truth, got))
    assert float(np.mean(scores)) >= 0.9
    assert min(scores) >= 0.6  # even the tiniest objects are mostly recovered


def test_all_background_image_gives_empty_mask(tmp_path):
    rng = np.random.default_rng(1)
    img = np.clip(rng.normal(40, 8, size=(32, 32, 3)), 0, 255).astype(np.uint8)
    mask = segment_image(img)
    assert mask.sum() == 0


def test_prompt_falls_back_to_class_name(tmp_path):
    (tmp_path / "data" / "wide").mkdir(parents=True)
    (tmp_path / "data" / "tall").mkdir(parents=True)
    img = np.full((8, 8, 3), 30, dtype=np.uint8)
    for cls in ("wide", "tall"):
        Image.fromarray(img).save(tmp_path / "data" / cls / "x.png")
    used = gen_masks(tmp_path / "data", tmp_path / "masks",
                     prompts={"wide": "a wide ellipse"})
    assert used == {"wide": "a wide ellipse", "tall": "tall"}
    assert resolve_prompts(["a", "b"], None) == {"a": "a", "b": "b"}


def test_masks_loadable_by_pipeline(tmp_path):
    from patchstill.foreground import load_mask, mask_path_for, occupancy
    from patchstill.ingest import scan_dataset

    gen_split(tmp_path / "data", tmp_path / "truth", per_class=3, seed=4)
    gen_masks(tmp_path / "data", tmp_path / "gen")
    _, records = scan_dataset(tmp_path / "data")
    for record in records:
        mask = load_mask(mask_path_for(tmp_path / "gen", record), record)
        assert 0.0 <= occupancy(mask).ratio <= 1.0
