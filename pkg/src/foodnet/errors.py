"""Exception types shared across the package."""

from __future__ import annotations


class FoodNetError(Exception):
    """Base class for all library errors."""


class ParseError(FoodNetError):
    """Raised when an input stream or config file cannot be parsed.

    Carries row/column diagnostics in the message where available.
    """


class DegenerateNetworkError(FoodNetError, ValueError):
    """Raised when a network is too small or empty for the requested metric."""


class IterationLimitError(FoodNetError):
    """Raised when an iterative solver fails to converge.

    The last iterate is attached so callers can inspect how far the
    computation got.
    """

    def __init__(self, message: str, last_scores: dict[str, float] | None = None):
        super().__init__(message)
        self.last_scores = last_scores or {}


class SingularDesignError(FoodNetError, ValueError):
    """Raised on a rank-deficient regression design; names the dependent columns."""

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class DegenerateFeatureError(FoodNetError, ValueError):
    """Raised when a feature column is constant and cannot be standardized."""

    def __init__(self, message: str, column: str = ""):
        super().__init__(message)
        self.column = column


class InsufficientDataError(FoodNetError, ValueError):
    """Raised when there are too few complete rows to fit the requested model."""
