"""
Exception hierarchy for the continuum-robot estimation package.

Every error raised on purpose by the library derives from ``EstimationError``
so callers (and the CLI) can map them to exit codes in one place.
"""

from typing import Optional

import numpy as np


class EstimationError(Exception):
    """Base exception for estimation, solver and experiment errors."""
    pass


class InvalidArgumentError(EstimationError, ValueError):
    """Raised when an operation receives arguments outside its domain."""
    pass


class DataValidationError(EstimationError, ValueError):
    """Raised when input data or a configuration fails validation."""
    pass


class LogParseError(DataValidationError):
    """Raised when a measurement log row cannot be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericFailureError(EstimationError):
    """Raised when a computation produces non-finite or singular values."""

    def __init__(self, message: str, iterate: Optional[np.ndarray] = None):
        super().__init__(message)
        self.iterate = None if iterate is None else np.array(iterate, dtype=float)
