"""Exception hierarchy shared by every module in the package."""

from __future__ import annotations


class IdaError(Exception):
    """Base class for all package errors."""


class MismatchedBins(IdaError):
    pass


class MissingClass(IdaError):
    """A class-conditional quantity was requested but one label is absent."""


class UnsupportedShift(IdaError):
    """Induced mass sits where the source has none (covariate support violation)."""


class OutOfDomain(IdaError):
    pass


class InvalidConfig(IdaError):
    pass


class DimensionMismatch(IdaError):
    pass


class NonFinite(IdaError):
    pass


class DegenerateFitness(IdaError):
    pass


class DegenerateAccuracy(IdaError):
    pass


class MissingConditional(IdaError):
    pass


class AssumptionsUnmet(IdaError):
    pass


class InvalidAlpha(IdaError):
    pass


class ParseError(IdaError):
    pass


class NonMonotoneCDF(IdaError):
    pass


class ConfigError(IdaError):
    pass


class InvariantViolation(IdaError):
    """A bound inequality failed beyond its tolerance."""
