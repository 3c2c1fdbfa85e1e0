"""
Exception hierarchy for ripeness.

Every error kind raised by the pipeline derives from :class:`RipenessError` and from the builtin
exception it specializes, so callers may catch either.
"""

from typing import Optional


class RipenessError(Exception):
    """Root of all errors raised by this package."""


class InvalidShapeError(RipenessError, ValueError):
    """A shape list is empty or holds a non-positive extent."""


class ShapeError(RipenessError, ValueError):
    """Operand shapes are mutually inconsistent."""


class InvalidRangeError(RipenessError, ValueError):
    """A numeric interval is empty or reversed."""


class CorruptDataError(RipenessError, ValueError):
    """A serialized tensor is truncated or inconsistent with its header."""


class ContractError(RipenessError, RuntimeError):
    """An API precondition was violated (stale cache, missing gradient, ...)."""


class InvalidRateError(RipenessError, ValueError):
    """A dropout rate is outside ``[0, 1)``."""


class LabelError(RipenessError, ValueError):
    """A class label is outside the label set."""


class ConfigError(RipenessError, ValueError):
    """A run, grid or scene configuration is invalid."""


class RangeError(RipenessError, ValueError):
    """A value is outside its documented schedule (e.g. a ripening day)."""


class DatasetError(RipenessError, ValueError):
    """A dataset is empty, unsplit or otherwise unusable."""


class DatasetIOError(RipenessError, OSError):
    """A dataset directory or file cannot be read or written."""


class FormatError(RipenessError, ValueError):
    """A checkpoint file has a bad magic tag, version or layout."""


class IncompatibleArchitectureError(RipenessError, ValueError):
    """A checkpoint's layer manifest does not match the expected architecture."""


class EvaluationError(RipenessError, ValueError):
    """An evaluation cannot be carried out (empty subset, input mismatch)."""


class DivergenceError(RipenessError, RuntimeError):
    """Training produced a non-finite loss or parameter."""

    def __init__(self, epoch: int, batch: int, detail: Optional[str] = None):
        self.epoch = epoch
        self.batch = batch
        message = f"Training diverged at epoch {epoch}, batch {batch}"
        if detail:
            message += f": {detail}"
        super().__init__(message)
