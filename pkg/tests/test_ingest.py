from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest
from PIL import Image

from patchstill import ingest
from patchstill.errors import DecodeError, DimensionMismatch, EmptyDataset


def _write_png(path, pixels):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path)


def test_scan_orders_classes_and_images_lexicographically(tmp_path):
    red = np.full((4, 4, 3), (255, 0, 0), dtype=np.uint8)
    for cls in ("dog", "cat"):
        for name in ("b.png", "a.png"):
            _write_png(tmp_path / cls / name, red)
    classes, records = ingest.scan_dataset(tmp_path)
    assert [c.name for c in classes] == ["cat", "dog"]
    assert [c.class_id for c in classes] == [0, 1]
    assert [r.image_id for r in records] == [
        "cat/a.png", "cat/b.png", "dog/a.png", "dog/b.png",
    ]
    assert all(r.label == r.class_id for r in records)


def test_scan_single_class_single_image(tmp_path):
    _write_png(tmp_path / "only" / "x.png", np.zeros((2, 2, 3), dtype=np.uint8))
    classes, records = ingest.scan_dataset(tmp_path)
    assert len(classes) == 1 and len(records) == 1
    assert records[0].width == 2 and records[0].height == 2


def test_scan_empty_class_raises(tmp_path):
    _write_png(tmp_path / "full" / "x.png", np.zeros((2, 2, 3), dtype=np.uint8))
    (tmp_path / "empty").mkdir()
    with pytest.raises(EmptyDataset):
        ingest.scan_dataset(tmp_path)


def test_scan_no_classes_raises(tmp_path):
    with pytest.raises(EmptyDataset):
        ingest.scan_dataset(tmp_path)


def test_prompts_json_overrides_class_name(tmp_path):
    _write_png(tmp_path / "n02979186" / "x.png", np.zeros((2, 2, 3), dtype=np.uint8))
    (tmp_path / "prompts.json").write_text(json.dumps({"n02979186": "cassette player"}))
    classes, _ = ingest.scan_dataset(tmp_path)
    assert classes[0].prompt == "cassette player"


def test_prompt_defaults_to_directory_name(tmp_path):
    _write_png(tmp_path / "husky" / "x.png", np.zeros((2, 2, 3), dtype=np.uint8))
    classes, _ = ingest.scan_dataset(tmp_path)
    assert classes[0].prompt == "husky"


def test_load_image_solid_red(tmp_path):
    red = np.full((4, 4, 3), (255, 0, 0), dtype=np.uint8)
    _write_png(tmp_path / "c" / "r.png", red)
    _, records = ingest.scan_dataset(tmp_path)
    raster = ingest.load_image(records[0])
    assert raster.shape == (4, 4, 3)
    assert np.array_equal(raster, red)


def test_load_image_grayscale_replicates_channels(tmp_path):
    gray = np.array([[0, 128], [200, 255]], dtype=np.uint8)
    path = tmp_path / "c" / "g.png"
    path.parent.mkdir(parents=True)
    Image.fromarray(gray, mode="L").save(path)
    _, records = ingest.scan_dataset(tmp_path)
    raster = ingest.load_image(records[0])
    assert raster.shape == (2, 2, 3)
    assert np.array_equal(raster[:, :, 0], gray)
    assert np.array_equal(raster[:, :, 1], gray)
    assert np.array_equal(raster[:, :, 2], gray)


def test_load_image_truncated_file_raises_decode_error(tmp_path):
    big = np.random.default_rng(0).integers(0, 256, (64, 64, 3)).astype(np.uint8)
    path = tmp_path / "c" / "t.png"
    _write_png(path, big)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    _, records = ingest.scan_dataset(tmp_path)
    with pytest.raises(DecodeError):
        ingest.load_image(records[0])


def test_load_image_dimension_mismatch(tmp_path):
    _write_png(tmp_path / "c" / "x.png", np.zeros((4, 4, 3), dtype=np.uint8))
    _, records = ingest.scan_dataset(tmp_path)
    lying = dataclasses.replace(records[0], width=8, height=8)
    with pytest.raises(DimensionMismatch):
        ingest.load_image(lying)


def test_rescan_is_byte_identical(tmp_path):
    rng = np.random.default_rng(3)
    for cls in ("a", "b", "c"):
        for i in range(3):
            _write_png(tmp_path / cls / f"{i}.png",
                       rng.integers(0, 256, (5, 7, 3)).astype(np.uint8))
    first = ingest.manifest_json(ingest.scan_dataset(tmp_path)[1])
    second = ingest.manifest_json(ingest.scan_dataset(tmp_path)[1])
    assert first == second
    rows = json.loads(first)
    assert isinstance(rows, list) and len(rows) == 9
    assert list(rows[0]) == ["image_id", "class_id", "path", "width", "height", "label"]
