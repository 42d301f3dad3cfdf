"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all finslerlab errors."""


class DomainError(FinslerError):
    """A point lies outside the domain of a field."""


class SingularMetricError(FinslerError):
    """A metric matrix is (numerically) singular or indefinite."""


class RegularityError(FinslerError):
    """A Finsler regularity condition is violated."""


class PositivityError(FinslerError):
    """A deformation factor or radicand lost positivity."""


class UnsupportedFamilyError(FinslerError):
    """No closed-form family matches the requested (r, p) parameters."""
