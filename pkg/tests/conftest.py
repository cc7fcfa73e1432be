from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthdata import build_dataset  # noqa: E402


@pytest.fixture(scope="session")
def synth_tree(tmp_path_factory):
    """Session-wide 3-class synthetic dataset (60 images, analytic masks)."""
    base = tmp_path_factory.mktemp("synth")
    dataset = base / "data"
    masks = base / "masks"
    entries = build_dataset(dataset, masks, per_class=20, n_classes=3, seed=7)
    return {"root": base, "dataset": dataset, "masks": masks, "entries": entries}
