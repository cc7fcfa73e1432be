"""Realism scoring of patches.

A patch's realism score is the probability an observer classifier assigns
to the patch's ground-truth class. Two scorer kinds exist:

* ``model`` runs a TorchScript classifier (single NCHW float32 input
  normalized to [0, 1], single output of length class_count). Whether the
  output is logits or probabilities is detected once at load time from a
  probe input and can be overridden via the ``outputs`` setting.
* ``mock`` is a deterministic model-free scorer for oracle testing: the
  score of a patch is the exact foreground fraction of its source
  rectangle under the image's mask. A custom ``mock_predict`` callable can
  replace it with any fixed distribution function (stub teachers).

Scores are pure functions of the model bytes and patch bytes, so any
worker may score any patch.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, InferenceError, RectOutOfBounds, ShapeError
from .foreground import Mask
from .raster import resize, validate_raster


@dataclass
class ScorerHandle:
    """Immutable description of a scorer; shareable across workers.

    ``transform`` post-processes the scalar score (the selection stage is
    invariant under any strictly increasing transform; tests rely on
    this hook). ``mock_predict`` turns a mock handle into a stub
    classifier returning a full distribution for a raster.
    """

    kind: str = "mock"  # "model" or "mock"
    model_path: Optional[str] = None
    input_side: int = 32
    class_count: int = 2
    outputs: str = "auto"  # "auto" | "logits" | "probs"
    transform: Optional[Callable[[float], float]] = None
    mock_predict: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _local: threading.local = field(
        default_factory=threading.local, repr=False, init=False, compare=False)
    _is_probs: Optional[bool] = field(default=None, repr=False, init=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("model", "mock"):
            raise ConfigError(f"scorer kind must be 'model' or 'mock', got {self.kind!r}")
        if self.outputs not in ("auto", "logits", "probs"):
            raise ConfigError(f"scorer outputs must be auto|logits|probs, got {self.outputs!r}")
        if self.kind == "model":
            if not self.model_path:
                raise ConfigError("model scorer requires a model path")
            self._detect_outputs()

    # -- model session handling --------------------------------------------

    def _session(self):
        # One loaded module per worker thread; inference is pinned to a
        # single torch thread so results do not depend on worker count.
        mod = getattr(self._local, "module", None)
        if mod is None:
            try:
                import torch
            except ImportError as exc:  # pragma: no cover - env without torch
                raise InferenceError("model scorer requires torch to be installed") from exc
            torch.set_num_threads(1)
            try:
                mod = torch.jit.load(self.model_path, map_location="cpu")
            except Exception as exc:
                raise InferenceError(f"cannot load model {self.model_path}: {exc}") from exc
            mod.eval()
            self._local.module = mod
        return mod

    def _run_model(self, batch: np.ndarray) -> np.ndarray:
        import torch

        mod = self._session()
        try:
            with torch.no_grad():
                out = mod(torch.from_numpy(batch))
        except Exception as exc:
            raise InferenceError(f"model run failed: {exc}") from exc
        arr = out.detach().cpu().numpy().reshape(-1)
        if arr.shape[0] != self.class_count:
            raise ShapeError(
                f"model emitted {arr.shape[0]} outputs, expected {self.class_count}"
            )
        return arr.astype(np.float64)

    def _detect_outputs(self) -> None:
        if self.outputs == "probs":
            self._is_probs = True
            return
        if self.outputs == "logits":
            self._is_probs = False
            return
        probe = np.full((1, 3, self.input_side, self.input_side), 0.5, dtype=np.float32)
        raw = self._run_model(probe)
        self._is_probs = abs(float(raw.sum()) - 1.0) <= 1e-3

    # -- distributions ------------------------------------------------------

    def predict(self, patch: np.ndarray) -> np.ndarray:
        """Full predicted class distribution for a raster patch."""
        validate_raster(patch)
        if self.kind == "mock":
            fn = self.mock_predict or (lambda p: mock_distribution(p, self.class_count))
            probs = np.asarray(fn(patch), dtype=np.float64).reshape(-1)
            if probs.shape[0] != self.class_count:
                raise ShapeError(
                    f"mock predictor emitted {probs.shape[0]} outputs, "
                    f"expected {self.class_count}"
                )
            return probs
        resized = resize(patch, self.input_side)
        batch = (resized.astype(np.float32) / 255.0).transpose(2, 0, 1)[None, ...]
        raw = self._run_model(np.ascontiguousarray(batch))
        if self._is_probs:
            return raw
        shifted = raw - raw.max()
        exp = np.exp(shifted)
        return exp / exp.sum()


# Teachers share the scorer contract; the alias keeps call sites readable.
TeacherHandle = ScorerHandle


@dataclass(frozen=True)
class ScoredPatch:
    candidate: object  # PatchCandidate
    score: float


def mock_distribution(patch: np.ndarray, class_count: int) -> np.ndarray:
    """Built-in deterministic stand-in distribution for mock teachers.

    Softmax over the mean intensities of ``class_count`` horizontal
    stripes; depends only on pixel bytes, so it is bit-stable.
    """
    h = patch.shape[0]
    means = np.empty(class_count, dtype=np.float64)
    edges = np.linspace(0, h, class_count + 1).astype(int)
    for c in range(class_count):
        lo, hi = edges[c], max(edges[c + 1], edges[c] + 1)
        lo = min(lo, h - 1)
        means[c] = float(patch[lo:hi].mean()) / 255.0
    exp = np.exp(means - means.max())
    return exp / exp.sum()


def mock_score(patch_rect, mask: Mask) -> float:
    """Exact foreground fraction of ``patch_rect`` within ``mask``."""
    x, y, w, h = patch_rect.x, patch_rect.y, patch_rect.w, patch_rect.h
    if x < 0 or y < 0 or w < 1 or h < 1 or x + w > mask.width or y + h > mask.height:
        raise RectOutOfBounds(
            f"rect x={x} y={y} w={w} h={h} outside {mask.width}x{mask.height} mask"
        )
    count = int(np.count_nonzero(mask.bits[y : y + h, x : x + w]))
    return count / (w * h)


def score_patch(scorer: ScorerHandle, patch: np.ndarray, true_class: int,
                rect=None, mask: Optional[Mask] = None) -> float:
    """Realism score of ``patch`` for its ground-truth class.

    Model scorers use pixel content only. Mask-based mock scorers need the
    patch's source rectangle and the image mask (``rect``/``mask``).
    """
    if not 0 <= true_class < scorer.class_count:
        raise ConfigError(
            f"true_class {true_class} outside [0, {scorer.class_count})"
        )
    if scorer.kind == "mock" and scorer.mock_predict is None:
        if rect is None or mask is None:
            raise ConfigError("mask-based mock scorer needs rect and mask context")
        raw = mock_score(rect, mask)
    else:
        raw = float(scorer.predict(patch)[true_class])
    if scorer.transform is not None:
        raw = float(scorer.transform(raw))
    return raw
