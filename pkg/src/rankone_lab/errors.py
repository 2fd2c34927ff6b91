"""Shared exception types and the boundary-ambiguity flag.

Strict open-ball predicates (shadows, corridors) compare a distance-like
quantity against a radius.  When the margin falls inside a symmetric
tolerance band the configuration sits on the equality locus; we emit a
``BoundaryAmbiguityWarning`` and resolve the predicate on the side the
equality locus belongs to (strict predicates: outside; closed
universally-quantified predicates: inside).
"""

from __future__ import annotations

import warnings

#: Half-width of the symmetric tolerance band around strict comparisons.
BOUNDARY_BAND = 1e-12


class RankOneLabError(Exception):
    """Base class for all package errors."""


class ModelMismatchError(RankOneLabError):
    """Objects from different model spaces were combined."""


class DegeneratePairError(RankOneLabError):
    """A boundary pair that must be distinct/joinable is not."""


class GeometryError(RankOneLabError):
    """A geometric precondition (radius, ordering, joinability) failed."""


class InsufficientDataError(RankOneLabError):
    """Not enough data (orbit points, lengths, jump points) to proceed."""


class ExponentTooSmallError(RankOneLabError):
    """Regularization exponent at or below the critical exponent estimate."""


class WorkBudgetExceededError(RankOneLabError):
    """Enumeration exceeded the configured work budget."""

    def __init__(self, message: str, completed_depth: int, partial_count: int):
        super().__init__(message)
        self.completed_depth = completed_depth
        self.partial_count = partial_count


class PingPongViolation(RankOneLabError):
    """Klein-criterion violation; carries a concrete witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class BoundaryAmbiguityWarning(UserWarning):
    """A strictness decision fell inside the tolerance band."""


def flag_ambiguous(quantity: float, threshold: float, context: str) -> None:
    warnings.warn(
        f"{context}: value {quantity!r} within {BOUNDARY_BAND} of threshold "
        f"{threshold!r}; deciding on the equality-locus side",
        BoundaryAmbiguityWarning,
        stacklevel=3,
    )


def strictly_less(value: float, threshold: float, context: str,
                  band: float = BOUNDARY_BAND) -> bool:
    """Strict ``value < threshold`` with the ambiguity band.

    Inside the band the equality locus is excluded (open-ball semantics),
    so the result is False, but the ambiguity is flagged.
    """
    if abs(value - threshold) <= band:
        flag_ambiguous(value, threshold, context)
        return False
    return value < threshold


def weakly_less(value: float, threshold: float, context: str,
                band: float = BOUNDARY_BAND) -> bool:
    """Closed ``value <= threshold`` with the ambiguity band.

    Inside the band the equality locus is included (the worst-case point
    sits on the closed ball boundary), so the result is True, flagged.
    """
    if abs(value - threshold) <= band:
        flag_ambiguous(value, threshold, context)
        return True
    return value < threshold
