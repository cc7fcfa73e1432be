"""Dataset scanning and image decoding.

Expected layout: ``root/<class_name>/<image>.{png,jpg,jpeg}``. Class ids
are assigned by ascending lexicographic directory name so re-scanning the
same tree always yields the same manifest. An optional ``root/prompts.json``
(object of class name to prompt string) supplies the textual prompt handed
to the segmenter adapter; classes without an entry fall back to their
directory name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DimensionMismatch, EmptyDataset, UnreadableEntry

RASTER_EXTENSIONS = {".png", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class ClassSpec:
    """One dataset class: contiguous id, directory name, segmenter prompt."""

    class_id: int
    name: str
    prompt: str


@dataclass(frozen=True)
class ImageRecord:
    """One source image; ``label`` is the ground-truth class id."""

    image_id: str
    class_id: int
    path: Path
    width: int
    height: int
    label: int


def _read_prompts(root: Path) -> dict[str, str]:
    prompts_path = root / "prompts.json"
    if not prompts_path.is_file():
        return {}
    try:
        data = json.loads(prompts_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableEntry(f"cannot read {prompts_path}: {exc}") from exc
    if not isinstance(data, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in data.items()
    ):
        raise UnreadableEntry(f"{prompts_path} must map class name to prompt string")
    return data


def _probe_dimensions(path: Path) -> tuple[int, int]:
    try:
        with Image.open(path) as img:
            return img.width, img.height
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise UnreadableEntry(f"cannot read image header of {path}: {exc}") from exc


def scan_dataset(root: str | Path) -> tuple[list[ClassSpec], list[ImageRecord]]:
    """Build the deterministic manifest for a directory-per-class tree.

    Classes and the images within each class are ordered lexicographically.
    Raises EmptyDataset when no class directory exists or any class holds
    zero images with a recognized raster extension.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"dataset root {root} is not a directory")
    prompts = _read_prompts(root)

    class_dirs = sorted(
        (d for d in root.iterdir() if d.is_dir() and not d.name.startswith(".")),
        key=lambda d: d.name,
    )
    if not class_dirs:
        raise EmptyDataset(f"no class directories under {root}")

    classes: list[ClassSpec] = []
    records: list[ImageRecord] = []
    for class_id, class_dir in enumerate(class_dirs):
        name = class_dir.name
        classes.append(ClassSpec(class_id=class_id, name=name, prompt=prompts.get(name, name)))
        files = sorted(
            (f for f in class_dir.iterdir()
             if f.is_file() and f.suffix.lower() in RASTER_EXTENSIONS),
            key=lambda f: f.name,
        )
        if not files:
            raise EmptyDataset(f"class directory {class_dir} holds no images")
        for f in files:
            width, height = _probe_dimensions(f)
            if width < 1 or height < 1:
                raise UnreadableEntry(f"{f} reports degenerate dimensions {width}x{height}")
            records.append(
                ImageRecord(
                    image_id=f"{name}/{f.name}",
                    class_id=class_id,
                    path=f,
                    width=width,
                    height=height,
                    label=class_id,
                )
            )
    return classes, records


def load_image(record: ImageRecord) -> np.ndarray:
    """Decode ``record.path`` into an (H, W, 3) uint8 raster.

    Grayscale inputs are replicated across the three channels. Raises
    DecodeError on corrupt data and DimensionMismatch when the decoded
    size disagrees with the manifest.
    """
    try:
        with Image.open(record.path) as img:
            rgb = img.convert("RGB")
            pixels = np.asarray(rgb, dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {record.path}: {exc}") from exc
    h, w = pixels.shape[:2]
    if w != record.width or h != record.height:
        raise DimensionMismatch(
            f"{record.image_id}: manifest says {record.width}x{record.height}, "
            f"file decodes to {w}x{h}"
        )
    return pixels


def manifest_json(records: list[ImageRecord]) -> str:
    """Serialize the manifest as a JSON array of records, stable field order."""
    payload = [
        {
            "image_id": r.image_id,
            "class_id": r.class_id,
            "path": str(r.path),
            "width": r.width,
            "height": r.height,
            "label": r.label,
        }
        for r in records
    ]
    return json.dumps(payload, indent=2) + "\n"
