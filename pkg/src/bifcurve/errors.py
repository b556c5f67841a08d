"""Exception hierarchy shared by the numerical modules and the CLI."""


class BifcurveError(Exception):
    """Base class for all package errors."""


class AdmissibilityViolation(BifcurveError):
    """D(u) fails to stay positive on the queried range."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonFinite(BifcurveError):
    """An integrand or ODE state produced inf/nan."""


class PanelBudgetExceeded(BifcurveError):
    """Adaptive subdivision hit ``max_panels`` before converging."""


class QuadratureFailure(BifcurveError):
    """A quadrature did not reach the requested tolerance."""

    def __init__(self, message, alpha=None, result=None):
        super().__init__(message)
        self.alpha = alpha
        self.result = result


class InconsistentPair(BifcurveError):
    """An (alpha, lambda) pair does not satisfy the time map."""


class UnsupportedFamily(BifcurveError):
    """No asymptotic formula is available for this family/regime."""


class InsufficientCoverage(BifcurveError):
    """Too few oscillation extrema to fit an envelope."""


class InsufficientRange(BifcurveError):
    """A rate scan does not span enough frequencies."""


class NoConvergence(BifcurveError):
    """An iterative solver ran out of iterations."""
