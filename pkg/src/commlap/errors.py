"""Exception types shared across the package."""


class CommLapError(Exception):
    """Base class for all package errors."""


class ValidationError(CommLapError, ValueError):
    """Invalid input or parameter."""


class DegenerateScaleError(ValidationError):
    """A local scale collapsed to zero (duplicate points)."""


class NumericalFailure(CommLapError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""
