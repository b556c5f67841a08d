"""Bifurcation curves lambda(alpha) for [D(u)u']' + lambda g(u) = 0 on (0, 1)."""

from .errors import (
    AdmissibilityViolation,
    BifcurveError,
    InconsistentPair,
    InsufficientCoverage,
    InsufficientRange,
    NoConvergence,
    NonFinite,
    PanelBudgetExceeded,
    QuadratureFailure,
    UnsupportedFamily,
)
from .model import ProblemFamily, ProblemSpec

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityViolation",
    "BifcurveError",
    "InconsistentPair",
    "InsufficientCoverage",
    "InsufficientRange",
    "NoConvergence",
    "NonFinite",
    "PanelBudgetExceeded",
    "ProblemFamily",
    "ProblemSpec",
    "QuadratureFailure",
    "UnsupportedFamily",
]
