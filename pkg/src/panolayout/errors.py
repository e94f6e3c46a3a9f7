"""Exception hierarchy shared by every module."""


class LayoutError(Exception):
    """Base class for all package errors."""


class DomainError(LayoutError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidBoundaryError(DomainError):
    """A boundary row sits on the wrong side of the horizon."""


class CountMismatchError(DomainError):
    """Corner sets that must pair up have different sizes."""


class DataError(LayoutError, ValueError):
    """Input data (depth maps, files) violates its contract."""


class NumericError(LayoutError, ArithmeticError):
    """A computation produced a non-finite value.

    ``trace`` carries whatever partial result was available when the
    failure was detected (for example a fit trace).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
