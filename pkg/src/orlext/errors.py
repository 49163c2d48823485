"""Exception types shared across the package."""


class OrlextError(Exception):
    """Base class for all package errors."""


class InputError(OrlextError, ValueError):
    """An argument violates a documented precondition."""


class OutsideDomainError(InputError):
    """A point was evaluated outside the domain of definition."""


class BracketError(OrlextError, ArithmeticError):
    """A monotone bracketing search hit its expansion cap."""


class UnreachableError(OrlextError):
    """Two points lie in different connected components."""


class ResolutionError(OrlextError):
    """The raster is too coarse for the requested construction."""
