"""Exception taxonomy shared across the package.

Every failure mode callers are expected to branch on gets its own class so
that the CLI can map categories onto exit codes without string matching.
"""

from __future__ import annotations

__all__ = [
    "NullwaveError",
    "DomainError",
    "ConfigError",
    "CatalogLookupError",
    "EvaluationError",
    "DegeneracyError",
    "ResolutionError",
    "CompatibilityError",
    "StagingError",
    "SequencingError",
    "CounterexampleError",
]


class NullwaveError(Exception):
    """Base class for all package-specific errors."""


class DomainError(NullwaveError, ValueError):
    """Input outside a function's mathematical domain (non-finite, wrong range)."""


class ConfigError(NullwaveError, ValueError):
    """Inconsistent or invalid configuration (mismatched table, bad key/value)."""


class CatalogLookupError(NullwaveError, KeyError):
    """Unknown catalog entry name."""


class EvaluationError(NullwaveError):
    """A user-supplied evaluator produced a non-finite value.

    Carries the offending sample point in ``.sample``.
    """

    def __init__(self, message: str, sample=None):
        super().__init__(message)
        self.sample = sample


class DegeneracyError(NullwaveError):
    """The principal matrix M lost invertibility margin; evolution must stop."""

    def __init__(self, message: str, margin: float | None = None):
        super().__init__(message)
        self.margin = margin


class ResolutionError(NullwaveError):
    """The grid is too coarse to resolve the requested data or functional."""


class CompatibilityError(NullwaveError):
    """Initial data violates the boundary compatibility requirements."""


class StagingError(NullwaveError):
    """A windowed diagnostic was asked for before its window filled."""


class SequencingError(NullwaveError):
    """Time-ordered updates arrived out of order."""


class CounterexampleError(NullwaveError):
    """A null-certified system blew up: the strongest falsification signal."""
