"""Exception hierarchy shared by the numeric modules and the CLI."""


class HeisenvarError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HeisenvarError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(HeisenvarError, ArithmeticError):
    """A series, recurrence or quadrature did not reach the requested accuracy.

    ``achieved`` carries the best error estimate obtained before giving up.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(message)
        self.achieved = achieved


class CancellationGuardError(HeisenvarError, ArithmeticError):
    """Alternating-series cancellation would swamp the requested tolerance."""

    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class ResourceGuardError(HeisenvarError, RuntimeError):
    """Enumeration or convolution would exceed a configured size cap."""


class SelfCheckError(HeisenvarError, AssertionError):
    """A mandatory internal identity check failed; results are not returned."""


class FitDegenerateError(HeisenvarError, ValueError):
    """Least-squares fit over a degenerate grid."""
