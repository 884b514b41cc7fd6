"""Exception types shared across the package."""


class DirsmoothError(Exception):
    """Base class for all package errors."""


class DomainError(DirsmoothError, ValueError):
    """An argument lies outside the domain of a function."""


class SeriesRangeError(DomainError):
    """The power series was asked for a concentration beyond its switch point."""


class ConcentrationError(DomainError):
    """A mean resultant is too close to the unit sphere to be inverted."""


class DataError(DirsmoothError, ValueError):
    """Input data are malformed or insufficient."""


class FitError(DirsmoothError, RuntimeError):
    """A likelihood fit could not be carried out."""
