"""Run configuration: one JSON file, flag overrides win.

Schema (all keys optional unless noted; dotted names below mirror the
nesting in the file):

    seed                 int, default 0 (env PATCHSTILL_SEED overrides,
                         CLI --seed overrides both)
    dataset_root         path, required
    masks_root           path, required for analyze/distill/sweep
    out_dir              path, required
    quantile             float in [0,1], default 0.30
    n_ipc                int >= 1, default 1
    Z                    perfect square >= 1, default 4
    distilled_side       int, default 64; divisible by sqrt(Z)
    workers              int >= 1, default 1
    allow_duplicates     bool, default false
    skip_bad_images      bool, default false
    select.k             int >= 1, default 5
    select.area_min/max  crop area fraction bounds, default 0.3 / 1.0
    select.aspect_min/max  aspect bounds, default 0.75 / 1.3333...
    select.s_patch       int, default distilled_side / sqrt(Z)
    scorer.kind          "mock" | "model", default "mock"
    scorer.model         path to TorchScript file (kind=model)
    scorer.input_side    int, default 32
    scorer.outputs       "auto" | "logits" | "probs", default "auto"
    teacher.*            same keys; default to the scorer's values
    label.M              int >= 1, default 4
    label.area_min/max   default 0.4 / 1.0
    label.aspect_min/max default 0.75 / 1.3333...
    segmenter.command    template with {image} {prompt} {out}, default none
    segmenter.workers    int >= 1, default 1
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError


@dataclass
class ModelConfig:
    kind: str = "mock"
    model: Optional[str] = None
    input_side: int = 32
    outputs: str = "auto"


@dataclass
class SelectConfig:
    k: int = 5
    area_min: float = 0.3
    area_max: float = 1.0
    aspect_min: float = 0.75
    aspect_max: float = 4.0 / 3.0
    s_patch: Optional[int] = None  # default: distilled_side / grid_dim


@dataclass
class LabelConfig:
    M: int = 4
    area_min: float = 0.4
    area_max: float = 1.0
    aspect_min: float = 0.75
    aspect_max: float = 4.0 / 3.0


@dataclass
class SegmenterConfig:
    command: Optional[str] = None
    workers: int = 1


@dataclass
class PipelineConfig:
    seed: int = 0
    dataset_root: Optional[str] = None
    masks_root: Optional[str] = None
    out_dir: Optional[str] = None
    quantile: float = 0.30
    n_ipc: int = 1
    Z: int = 4
    distilled_side: int = 64
    workers: int = 1
    allow_duplicates: bool = False
    skip_bad_images: bool = False
    select: SelectConfig = field(default_factory=SelectConfig)
    scorer: ModelConfig = field(default_factory=ModelConfig)
    teacher: ModelConfig = field(default_factory=ModelConfig)
    label: LabelConfig = field(default_factory=LabelConfig)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    _teacher_keys_set: set = field(default_factory=set, repr=False, compare=False)

    def validate(self) -> None:
        if not 0.0 <= self.quantile <= 1.0:
            raise ConfigError(f"quantile must lie in [0, 1], got {self.quantile}")
        grid = math.isqrt(self.Z)
        if self.Z < 1 or grid * grid != self.Z:
            raise ConfigError(f"Z must be a perfect square >= 1, got {self.Z}")
        if self.distilled_side % grid != 0:
            raise ConfigError(
                f"distilled_side {self.distilled_side} not divisible by sqrt(Z)={grid}"
            )
        if self.n_ipc < 1:
            raise ConfigError(f"n_ipc must be >= 1, got {self.n_ipc}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.select.k < 1:
            raise ConfigError(f"select.k must be >= 1, got {self.select.k}")
        if self.label.M < 1:
            raise ConfigError(f"label.M must be >= 1, got {self.label.M}")
        for name, lo, hi in (
            ("select.area", self.select.area_min, self.select.area_max),
            ("select.aspect", self.select.aspect_min, self.select.aspect_max),
            ("label.area", self.label.area_min, self.label.area_max),
            ("label.aspect", self.label.aspect_min, self.label.aspect_max),
        ):
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} bounds must satisfy 0 < min <= max, got {lo}..{hi}")
        for role, mc in (("scorer", self.scorer), ("teacher", self.teacher)):
            if mc.kind not in ("mock", "model"):
                raise ConfigError(f"{role}.kind must be mock|model, got {mc.kind!r}")
            if mc.kind == "model" and not mc.model:
                raise ConfigError(f"{role}.kind=model requires {role}.model")
            if mc.outputs not in ("auto", "logits", "probs"):
                raise ConfigError(f"{role}.outputs must be auto|logits|probs")

    @property
    def s_patch(self) -> int:
        if self.select.s_patch is not None:
            return self.select.s_patch
        return self.distilled_side // math.isqrt(self.Z)

    def canonical_json(self) -> str:
        def unwrap(obj: Any) -> Any:
            if hasattr(obj, "__dataclass_fields__"):
                return {
                    f.name: unwrap(getattr(obj, f.name))
                    for f in fields(obj)
                    if not f.name.startswith("_")
                }
            return obj

        return json.dumps(unwrap(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


_SECTIONS = {
    "select": SelectConfig,
    "scorer": ModelConfig,
    "teacher": ModelConfig,
    "label": LabelConfig,
    "segmenter": SegmenterConfig,
}


def _apply_section(target: Any, data: dict, section: str) -> set:
    seen = set()
    valid = {f.name for f in fields(target)}
    for key, value in data.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {section}.{key}")
        setattr(target, key, value)
        seen.add(key)
    return seen


def load_config(path: str | Path | None = None,
                overrides: dict[str, Any] | None = None) -> PipelineConfig:
    """Build a validated PipelineConfig from a JSON file plus overrides.

    ``overrides`` uses dotted keys ("quantile", "select.k", ...). Unset
    teacher keys inherit the scorer's values after all sources merge.
    """
    cfg = PipelineConfig()
    teacher_keys: set = set()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        top_valid = {f.name for f in fields(PipelineConfig) if not f.name.startswith("_")}
        for key, value in data.items():
            if key in _SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key} must be an object")
                seen = _apply_section(getattr(cfg, key), value, key)
                if key == "teacher":
                    teacher_keys |= seen
            elif key in top_valid:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key}")

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section, key = dotted.split(".", 1)
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section {section}")
            _apply_section(getattr(cfg, section), {key: value}, section)
            if section == "teacher":
                teacher_keys.add(key)
        else:
            if dotted not in {f.name for f in fields(PipelineConfig)}:
                raise ConfigError(f"unknown config key {dotted}")
            setattr(cfg, dotted, value)

    # Teacher inherits the scorer settings for any key never set explicitly.
    for f in fields(ModelConfig):
        if f.name not in teacher_keys:
            setattr(cfg.teacher, f.name, getattr(cfg.scorer, f.name))

    cfg._teacher_keys_set = teacher_keys
    cfg.validate()
    return cfg
