"""Exception hierarchy shared across the toolkit."""


class SiftLabError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(SiftLabError, ValueError):
    """Argument outside its documented domain (empty, non-finite, out of range)."""


class ShapeError(SiftLabError, ValueError):
    """Dimension mismatch between vectors/matrices."""


class InvalidState(SiftLabError):
    """Operation called on an object in the wrong state (e.g. empty cache)."""


class PhaseError(SiftLabError):
    """Warmup/approximate phase operation called in the wrong phase."""


class DegenerateVariance(SiftLabError):
    """R^2 undefined: zero variance in the evaluation window."""


class DegenerateInput(SiftLabError):
    """Metric undefined for this input (e.g. zero-norm reference vector)."""


class FormatError(SiftLabError):
    """Malformed trace file. Carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
