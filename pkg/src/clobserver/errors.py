"""Exceptions raised by clobserver.

Every error derives from :class:`ClObserverError`, so callers can catch the
whole family with one clause.
"""

__all__ = [
    'ClObserverError',
    'ClObserverShapeError',
    'ClObserverNonFiniteError',
    'ClObserverSingularMatrixError',
    'ClObserverInsufficientHistoryError',
    'ClObserverGainDivergenceError',
    'ClObserverTimeGridError',
    'ClObserverConfigError',
    'ClObserverRunHaltedError',
]


class ClObserverError(Exception):
    pass


class ClObserverShapeError(ClObserverError, ValueError):
    """Operand dimensions disagree, or a matrix is not square/symmetric."""


class ClObserverNonFiniteError(ClObserverError, ArithmeticError):
    """A kernel produced NaN or Inf from its inputs."""


class ClObserverSingularMatrixError(ClObserverError, ArithmeticError):
    """A linear solve met a singular (or not positive definite) matrix."""


class ClObserverInsufficientHistoryError(ClObserverError, LookupError):
    """A window lookback reaches before the oldest buffered sample."""


class ClObserverGainDivergenceError(ClObserverError, ArithmeticError):
    """The least-squares gain lost positive definiteness."""


class ClObserverTimeGridError(ClObserverError, ValueError):
    """A sample time is off the fixed sampling grid."""


class ClObserverConfigError(ClObserverError, ValueError):
    pass


class ClObserverRunHaltedError(ClObserverError):
    """A simulation stopped early.

    ``log`` holds every record produced before the failure and ``cause`` the
    original error.
    """

    def __init__(self, message, log, cause=None):
        super().__init__(message)
        self.log = log
        self.cause = cause
