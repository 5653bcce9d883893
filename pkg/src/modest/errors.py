"""Exception types shared across the package."""


class ModestError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ModestError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class QuadratureError(ModestError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance.

    The partial value and the error estimate are kept on the exception so
    callers can decide whether the result is still usable.
    """

    def __init__(self, message, value=float("nan"), abserr=float("nan")):
        super().__init__(message)
        self.value = value
        self.abserr = abserr


class EvaluationError(ModestError, ArithmeticError):
    """A user-supplied function returned NaN."""


class GridTooLargeError(DomainError):
    """The quantization grid exceeds the configured signal-count cap."""


class BinsFilteredError(ModestError, ValueError):
    """Every power bin was removed by the relative-mass cutoff."""
