"""
Exception types raised by the cache simulation framework.
"""

from typing import Optional


class HrCacheError(Exception):
    """Base class for all framework errors."""


class ConfigError(HrCacheError):
    """Invalid parameter values or configuration files."""


class TraceParseError(HrCacheError):
    """A trace file could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmptyTraceError(HrCacheError):
    """An operation that needs requests received none."""


class InsufficientDataError(HrCacheError):
    """An estimator was asked to fit an empty sample."""


class MissingHazardError(HrCacheError):
    """A sampled key has no hazard function."""


class FutureTableError(HrCacheError):
    """The next-use table does not match the replayed trace."""


class ModelFormatError(HrCacheError):
    """A serialized model could not be decoded."""
