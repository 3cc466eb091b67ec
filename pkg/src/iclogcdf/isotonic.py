"""Weighted pool-adjacent-violators for nondecreasing least squares."""
from __future__ import annotations

import numpy as np
from scipy.optimize import isotonic_regression


def _validate(targets, weights):
    y = np.asarray(targets, dtype=float)
    w = np.asarray(weights, dtype=float)
    if y.ndim != 1 or y.shape != w.shape:
        raise ValueError("targets and weights must be 1-d arrays of equal length")
    if np.any(~(w > 0)):
        raise ValueError("weights must be strictly positive")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    return y, w


def pava_increasing(targets, weights) -> np.ndarray:
    """Minimise ``sum w_i (x_i - y_i)^2`` over nondecreasing ``x``.

    Runs in O(k); pooled blocks take the weighted mean of their targets.
    """
    y, w = _validate(targets, weights)
    if len(y) == 0:
        return y.copy()
    return isotonic_regression(y, weights=w, increasing=True).x


def pava_increasing_capped(targets, weights, cap: float = 0.0) -> np.ndarray:
    """Same as :func:`pava_increasing` with the extra bound ``x_i <= cap``.

    For a linear order the bounded solution is the unbounded one truncated at
    ``cap``.
    """
    return np.minimum(pava_increasing(targets, weights), cap)


def least_concave_majorant(x, y) -> np.ndarray:
    """Values at ``x`` of the least concave majorant of the points ``(x_i, y_i)``.

    ``x`` must be strictly increasing.  One monotone-chain pass over the
    points builds the upper hull; the hull is then interpolated back on ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if len(x) <= 2:
        return y.copy()
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    hull = [0, 1]
    for i in range(2, len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or below the chord from a to i
            if (y[b] - y[a]) * (x[i] - x[a]) <= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])
