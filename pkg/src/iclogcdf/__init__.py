"""Log-concave NPMLE of a distribution function from interval-censored data."""
from .estimator import FitResult, evaluate_F, fit, fit_reduced, log_F, quantile
from .exceptions import (
    DomainError,
    InfeasibleStart,
    InvalidInterval,
    NonConvergence,
    QuantileAboveRange,
)
from .npmle import StepEstimate, fit_unconstrained
from .reduce import IntervalObservation, ReducedData, build_reduced, dedupe, reduce_intervals

__version__ = "0.1.0"

__all__ = [
    "FitResult",
    "IntervalObservation",
    "ReducedData",
    "StepEstimate",
    "build_reduced",
    "dedupe",
    "evaluate_F",
    "fit",
    "fit_reduced",
    "fit_unconstrained",
    "log_F",
    "quantile",
    "reduce_intervals",
    "DomainError",
    "InfeasibleStart",
    "InvalidInterval",
    "NonConvergence",
    "QuantileAboveRange",
]
