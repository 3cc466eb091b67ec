"""End-to-end fitting and evaluation of the log-concave distribution estimate."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .activeset import fit_logconcave
from .exceptions import QuantileAboveRange
from .likelihood import loglik
from .npmle import fit_unconstrained, initial_phi, linear_start
from .reduce import ReducedData, reduce_intervals


@dataclass(frozen=True)
class FitResult:
    """Fitted log-concave estimate on the reduced grid.

    ``F = exp(phi_hat)`` at ``tau``; between grid points ``log F`` is linear,
    ``F = 0`` before ``tau[0]`` and ``F = F(tau[-1])`` after ``tau[-1]``.
    """

    tau: np.ndarray
    phi_hat: np.ndarray
    knot_indices: np.ndarray
    loglik: float
    certificate_residual: float
    outer_iterations: int
    wall_time: float
    F_un: np.ndarray | None = None
    loglik_un: float = np.nan
    loglik_init: float = np.nan
    start: str = ""
    stop_reason: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def F(self) -> np.ndarray:
        return np.exp(self.phi_hat)

    @property
    def knots(self) -> np.ndarray:
        """Knot locations (grid times)."""
        return self.tau[self.knot_indices - 1]

    @property
    def n_knots(self) -> int:
        return len(self.knot_indices)

    def __call__(self, t):
        return evaluate_F(self, t)

    def to_dict(self) -> dict:
        out = {
            "tau": self.tau.tolist(),
            "phi": self.phi_hat.tolist(),
            "F": self.F.tolist(),
            "knots": self.knots.tolist(),
            "loglik": self.loglik,
            "certificate_residual": self.certificate_residual,
            "iterations": self.outer_iterations,
            "wall_time_ms": 1e3 * self.wall_time,
        }
        if self.F_un is not None:
            out["F_un"] = self.F_un.tolist()
            out["loglik_un"] = self.loglik_un
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        tau = np.asarray(d["tau"], dtype=float)
        knots = np.asarray(d["knots"], dtype=float)
        F_un = d.get("F_un")
        return cls(
            tau=tau,
            phi_hat=np.asarray(d["phi"], dtype=float),
            knot_indices=np.searchsorted(tau, knots) + 1,
            loglik=float(d["loglik"]),
            certificate_residual=float(d["certificate_residual"]),
            outer_iterations=int(d["iterations"]),
            wall_time=float(d["wall_time_ms"]) / 1e3,
            F_un=None if F_un is None else np.asarray(F_un, dtype=float),
            loglik_un=float(d.get("loglik_un", np.nan)),
        )

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        return cls.from_dict(json.loads(text))


def fit_reduced(data: ReducedData, eta: float = 1e-10, icm_tol: float = 1e-10, start: str = "lcm", **kwargs) -> FitResult:
    """Fit the log-concave MLE to already reduced data.

    Parameters
    ----------
    start : {"lcm", "linear"}
        ``"lcm"`` uses the least concave majorant of the log unconstrained MLE
        (falling back to the linear start if it has zero likelihood);
        ``"linear"`` forces the fallback.
    """
    if data.m == 0:
        raise ValueError("no finite grid points: every observation is uninformative")
    t0 = time.perf_counter()
    un = fit_unconstrained(data)
    if start == "linear":
        phi0, source = linear_start(data), "linear"
    elif start == "lcm":
        phi0, source = initial_phi(data, un)
    else:
        raise ValueError(f"unknown start {start!r}")
    res = fit_logconcave(data, phi0, eta=eta, icm_tol=icm_tol, **kwargs)
    elapsed = time.perf_counter() - t0
    return FitResult(
        tau=data.tau.copy(),
        phi_hat=res.phi,
        knot_indices=res.knots.knots.copy(),
        loglik=res.loglik,
        certificate_residual=res.certificate_residual,
        outer_iterations=res.outer_iterations,
        wall_time=elapsed,
        F_un=un.values,
        loglik_un=un.loglik,
        loglik_init=loglik(data, phi0),
        start=source,
        stop_reason=res.stop_reason,
        diagnostics={
            "certificate_active": res.certificate_active,
            "certificate_knots": res.certificate_knots,
            "subproblems": res.subproblems,
            "scores": res.scores,
            "unconstrained_iterations": un.iterations,
        },
    )


def fit(raw: Iterable[tuple[float, float]], eta: float = 1e-10, **kwargs) -> FitResult:
    """Log-concave NPMLE of ``F`` from raw intervals ``(left, right]``.

    Examples
    --------
    >>> res = fit([(0, 1), (0, 1), (1, 2)])
    >>> np.round(res.F, 6).tolist()
    [0.666667, 1.0]
    """
    return fit_reduced(reduce_intervals(raw), eta=eta, **kwargs)


def log_F(fit: FitResult, t):
    """``log F_hat(t)``; ``-inf`` before the first grid point."""
    t = np.asarray(t, dtype=float)
    tau, phi = fit.tau, fit.phi_hat
    out = np.interp(t, tau, phi)  # constant beyond tau_m
    return np.where(t < tau[0], -np.inf, out)


def evaluate_F(fit: FitResult, t):
    """``F_hat(t)``: 0 before ``tau_1``, log-linear between grid points, flat after ``tau_m``."""
    out = np.exp(log_F(fit, t))
    return float(out) if out.ndim == 0 else out


def quantile(fit: FitResult, p):
    """Smallest ``t`` with ``F_hat(t) >= p``.

    Raises
    ------
    QuantileAboveRange
        If ``p`` exceeds ``F_hat(tau_m)``.
    """
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((ps <= 0) | (ps >= 1)):
        raise ValueError("p must lie in (0, 1)")
    tau, phi = fit.tau, fit.phi_hat
    out = np.empty_like(ps)
    for n, pv in enumerate(ps):
        lp = np.log(pv)
        if lp > phi[-1]:
            raise QuantileAboveRange(f"p={pv} exceeds F(tau_m)={np.exp(phi[-1]):.6g}")
        j = int(np.searchsorted(phi, lp, side="left"))
        if j == 0:
            out[n] = tau[0]
        else:
            # invert the linear log segment on [tau_{j-1}, tau_j]
            frac = (lp - phi[j - 1]) / (phi[j] - phi[j - 1])
            out[n] = tau[j - 1] + frac * (tau[j] - tau[j - 1])
    return float(out[0]) if np.ndim(p) == 0 else out
