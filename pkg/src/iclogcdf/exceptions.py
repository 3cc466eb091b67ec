"""Exception types raised across the package."""


class InvalidInterval(ValueError):
    """An observation is not a valid censoring interval (L, R]."""


class DomainError(ValueError):
    """phi lies outside the effective domain of the log-likelihood."""


class InfeasibleStart(ValueError):
    """A starting value violates the shape constraints or has zero likelihood."""


class NonConvergence(RuntimeError):
    """An iterative solver hit its iteration budget."""


class QuantileAboveRange(ValueError):
    """The requested probability exceeds the fitted F at the last grid point."""
