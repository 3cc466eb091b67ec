"""Unconstrained NPMLE for interval-censored data and the log-LCM start.

The unconstrained estimate is parametrised by ``F_j = F(tau_j)``; it is
computed by the hybrid EM-ICM scheme: a self-consistency (EM) step on the
masses of the Turnbull innermost intervals followed by an ICM step on the
cumulative scale, with backtracking.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NonConvergence
from .isotonic import least_concave_majorant, pava_increasing
from .likelihood import in_domain
from .reduce import ObsClass, ReducedData


@dataclass(frozen=True)
class StepEstimate:
    """Right-continuous step function with ``F(t) = values[j]`` on ``[tau_j, tau_{j+1})``."""

    jump_points: np.ndarray
    values: np.ndarray
    loglik: float = np.nan
    iterations: int = 0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_points, t, side="right") - 1
        ext = np.concatenate(([0.0], self.values))
        return ext[idx + 1]


def cdf_loglik(data: ReducedData, F) -> float:
    """``sum w log(F(R) - F(L))`` for grid values ``F`` (with ``F_0 = 0``, ``F_{m+1} = 1``)."""
    ext = np.concatenate(([0.0], np.asarray(F, dtype=float), [1.0]))
    keep = data.obs_class != ObsClass.BOTH
    diff = ext[data.right_idx[keep]] - ext[data.left_idx[keep]]
    if np.any(diff <= 0):
        return -np.inf
    return float(np.dot(data.weight[keep], np.log(diff)))


def innermost_slots(data: ReducedData) -> np.ndarray:
    """Mask over mass slots ``1..m+1``; slot ``j`` is ``(tau_{j-1}, tau_j]``.

    A slot can carry mass only if its right end is some right endpoint and its
    left end is some left endpoint (slot 1 and the left set always qualify).
    """
    m = data.m
    is_right = np.zeros(m + 2, dtype=bool)
    is_right[data.right_idx] = True
    is_left = np.zeros(m + 2, dtype=bool)
    is_left[data.left_idx] = True
    is_left[0] = True
    slots = np.arange(1, m + 2)
    return is_right[slots] & is_left[slots - 1]


def _em_step(q, l_idx, r_idx, w, W):
    G = np.concatenate(([0.0], np.cumsum(q)))
    ratio = w / (G[r_idx] - G[l_idx])
    # mass k receives ratio_i for every observation with l_i < k <= r_i
    acc = np.bincount(l_idx + 1, ratio, len(q) + 2) - np.bincount(r_idx + 1, ratio, len(q) + 2)
    return q * np.cumsum(acc)[1 : len(q) + 1] / W


def _loglik_cum(G, l_idx, r_idx, w):
    ext = np.concatenate(([0.0], G, [1.0]))
    diff = ext[r_idx] - ext[l_idx]
    if np.any(diff <= 0):
        return -np.inf
    return float(np.dot(w, np.log(diff)))


def _cum_derivs(G, l_idx, r_idx, w):
    size = len(G) + 2
    ext = np.concatenate(([0.0], G, [1.0]))
    diff = ext[r_idx] - ext[l_idx]
    a = w / diff
    b = a / diff
    g = np.bincount(r_idx, a, size) - np.bincount(l_idx, a, size)
    h = np.bincount(r_idx, b, size) + np.bincount(l_idx, b, size)
    return g[1:-1], h[1:-1]


def fit_unconstrained(data: ReducedData, tol: float = 1e-10, max_iter: int = 5000) -> StepEstimate:
    """Unconstrained NPMLE of ``F`` on the reduced grid.

    Mass is confined to the Turnbull innermost slots; with ``K`` such slots
    the free parameters are the cumulative masses ``G_1..G_{K-1}``.  Each
    sweep is one EM step followed by one ICM step with backtracking, and the
    loop stops when a sweep moves ``G`` by less than ``tol`` in sup-norm.

    Raises
    ------
    NonConvergence
        After ``max_iter`` sweeps.
    """
    keep = data.obs_class != ObsClass.BOTH
    support = innermost_slots(data)
    kpos = np.concatenate(([0], np.cumsum(support)))  # slot index -> mass count
    l_idx = kpos[data.left_idx[keep]]
    r_idx = kpos[data.right_idx[keep]]
    w = data.weight[keep]
    W = float(w.sum())
    K = int(support.sum())

    def finish(G, val, it):
        F = np.concatenate(([0.0], G, [1.0]))[kpos[1 : data.m + 1]]
        return StepEstimate(data.tau.copy(), F, val, it)

    q = np.full(K, 1.0 / K)
    G = np.cumsum(q)[:-1]
    if K == 1:
        return finish(G, _loglik_cum(G, l_idx, r_idx, w), 0)
    for it in range(1, max_iter + 1):
        G_old = G
        q = _em_step(q, l_idx, r_idx, w, W)
        G = np.cumsum(q)[:-1]
        cur = _loglik_cum(G, l_idx, r_idx, w)

        g, h = _cum_derivs(G, l_idx, r_idx, w)
        h = np.maximum(h, 1e-12 * max(1.0, h.max()))
        target = np.clip(pava_increasing(G + g / h, h), 0.0, 1.0)
        direction = target - G
        lam = 1.0
        for _ in range(40):
            trial = G + lam * direction
            val = _loglik_cum(trial, l_idx, r_idx, w)
            if val > cur:
                G, cur = trial, val
                break
            lam *= 0.5
        q = np.diff(np.concatenate(([0.0], G, [1.0])))
        if np.max(np.abs(G - G_old)) < tol:
            return finish(G, cur, it)
    raise NonConvergence(f"unconstrained NPMLE did not converge in {max_iter} iterations")


def lcm_log_init(un: StepEstimate, data: ReducedData) -> np.ndarray:
    """Least concave majorant of ``log F_un`` on the grid, clamped to ``<= 0``."""
    vals = un(data.tau)
    if vals[0] <= 0:
        raise ValueError("unconstrained estimate must be positive at tau_1")
    return np.minimum(least_concave_majorant(data.tau, np.log(vals)), 0.0)


def linear_start(data: ReducedData) -> np.ndarray:
    """Deterministic fallback start: linear in ``tau`` from ``log 1e-3`` upward.

    The top value is ``0`` unless a right-censored observation starts at
    ``tau_m``, in which case it is ``log(1 - 1e-3)`` to keep ``l`` finite.
    """
    m = data.m
    lo = np.log(1e-3)
    ro = data.obs_class == ObsClass.RIGHT_ONLY
    hi = np.log1p(-1e-3) if np.any(data.left_idx[ro] == m) else 0.0
    if m == 1:
        return np.array([hi])
    tau = data.tau
    phi = lo + (hi - lo) * (tau - tau[0]) / (tau[-1] - tau[0])
    phi[-1] = hi  # rounding can push the endpoint just above the cap
    return phi


def initial_phi(data: ReducedData, un: StepEstimate | None = None):
    """LCM start if it has positive likelihood, else the linear fallback.

    Returns ``(phi0, source)`` with ``source`` in ``{"lcm", "linear"}``.
    """
    if un is None:
        un = fit_unconstrained(data)
    phi0 = lcm_log_init(un, data)
    if in_domain(data, phi0):
        return phi0, "lcm"
    return linear_start(data), "linear"
