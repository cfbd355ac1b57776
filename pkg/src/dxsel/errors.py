"""Semantic exception hierarchy shared across the package."""


class DxselError(Exception):
    """Base class for all package errors."""


class SchemaError(DxselError):
    """A dataset manifest or schema violates its invariants."""


class DatasetError(DxselError):
    """A patient file cannot be loaded into records."""


class RenderError(DxselError):
    """A vignette cannot be rendered from the given values."""


class CostError(DxselError):
    """A cost lookup failed (unknown feature in per-feature mode)."""


class SurrogateError(DxselError):
    """A simulator call failed after retries.

    ``raw_response`` carries the last reply for audit when one exists.
    """

    def __init__(self, message: str, raw_response: str | None = None):
        super().__init__(message)
        self.raw_response = raw_response


class ResponseParseError(SurrogateError):
    """A simulator reply violated its output contract."""


class SelectionError(DxselError):
    """No candidate can be selected (all evaluations failed or none given)."""


class SessionStateError(DxselError):
    """An operation is invalid for the session's current state."""
