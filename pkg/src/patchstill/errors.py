"""Exception hierarchy shared by all pipeline stages.

Errors carry enough context (usually an image_id or path) to locate the
offending input. The CLI maps these onto process exit codes: config errors
exit 1, data errors exit 2, inference errors exit 3.
"""

from __future__ import annotations


class PatchstillError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 2


class ConfigError(PatchstillError):
    """Invalid configuration or command usage."""

    exit_code = 1


# -- data errors (exit 2) -------------------------------------------------

class DataError(PatchstillError):
    exit_code = 2


class EmptyDataset(DataError):
    """No classes found, or a class directory holds zero images."""


class UnreadableEntry(DataError):
    """I/O failure while scanning a dataset entry."""


class DecodeError(DataError):
    """Image file exists but cannot be decoded."""


class DimensionMismatch(DataError):
    """Decoded image dimensions disagree with the manifest record."""


class MaskMissing(DataError):
    """Expected mask file does not exist."""


class MaskDimensionMismatch(DataError):
    """Mask dimensions disagree with the paired image."""


class EmptyClass(DataError):
    """A per-class statistic was requested for an empty value list."""


class SegmenterFailed(DataError):
    """External segmenter command exited nonzero."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


class DegenerateImage(DataError):
    """Image too small to crop (below 2x2)."""


class RectOutOfBounds(DataError):
    """Rectangle extends beyond the raster or mask bounds."""


class InsufficientPatches(DataError):
    """A class holds fewer patches than Z * n_ipc and duplication is off."""


class LengthNotDivisible(DataError):
    """Ranked patch list length is not a multiple of Z."""


class GroupSizeMismatch(DataError):
    """A synthesis group does not hold exactly Z patches."""


# -- inference errors (exit 3) --------------------------------------------

class InferenceError(PatchstillError):
    """Model run failed."""

    exit_code = 3


class ShapeError(PatchstillError):
    """Model output length does not match the dataset class count."""

    exit_code = 3
