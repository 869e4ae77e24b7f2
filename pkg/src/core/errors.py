"""Domain exceptions shared by every estimator and the command-line tools."""
from __future__ import annotations

from typing import Optional


class DatekitError(Exception):
    """Base class for recoverable estimation and validation failures."""


class ValidationError(DatekitError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(DatekitError):
    """Input file could not be parsed."""

    def __init__(self, message: str, *, row: Optional[int] = None, column: Optional[str] = None) -> None:
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class PerfectSeparation(DatekitError):
    """Propensity features separate treated from control units exactly."""


class SingleArm(DatekitError):
    """Panel has no treated or no control units."""


class DegenerateWeights(DatekitError):
    """A stabilized weight denominator is zero."""


class NumericalBreakdown(DatekitError):
    """A scale matrix lost positive definiteness during filtering."""


class RankDeficient(DatekitError):
    """Regression design is collinear."""


class NonConvergence(DatekitError):
    """Optimizer hit its iteration cap."""


class DegenerateVariance(DatekitError):
    """Residual variance collapsed to zero."""


class WrongScenario(DatekitError):
    """Method is undefined for the panel's scenario kind."""


class InfeasibleFit(DatekitError):
    """Not enough donor units to fit."""


class LengthMismatch(DatekitError):
    """Two paths that must be aligned have different horizons."""


class MissingBounds(DatekitError):
    """Method reports no interval."""


class MissingReference(DatekitError):
    """Standardization reference cell is absent."""


class IncompatibleMethod(DatekitError):
    """Requested method cannot run on the configured scenario kind."""


class InsufficientPreHistory(DatekitError):
    """Placebo time leaves too little history on either side."""
