"""Log-likelihood in the log-distribution parametrisation and its derivatives.

``phi[j-1]`` holds ``log F(tau_j)`` for ``j = 1..m``; by convention
``phi_0 = -inf`` and ``phi_{m+1} = 0``.  Each observation touches at most two
coordinates, so every routine here is a single O(n) pass built on
``np.bincount``.
"""
from __future__ import annotations

import numpy as np

from .exceptions import DomainError
from .reduce import ReducedData


def _check_len(data: ReducedData, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (data.m,):
        raise ValueError(f"phi must have shape ({data.m},), got {phi.shape}")
    return phi


def _extended(phi: np.ndarray) -> np.ndarray:
    # slot 0 is never read for finite terms; slot m+1 holds phi_{m+1} = 0
    return np.concatenate(([-np.inf], phi, [0.0]))


def log1mexp(x):
    """``log(1 - e^x)`` for ``x < 0``, accurate for both small and large ``|x|``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -np.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_diff_exp(a, b):
    """``log(e^a - e^b)`` for ``a > b``; ``-inf`` where ``a <= b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a + log1mexp(np.minimum(b - a, 0.0))
    return np.where(a > b, out, -np.inf)


def loglik(data: ReducedData, phi) -> float:
    """Log-likelihood ``l(phi)``; returns ``-inf`` outside its domain."""
    phi = _check_len(data, phi)
    ext = _extended(phi)
    total = float(np.dot(data._lo_w, ext[data._lo_r]))
    if len(data._ro_l):
        pl = ext[data._ro_l]
        if np.any(pl >= 0.0):
            return -np.inf
        total += float(np.dot(data._ro_w, log1mexp(pl)))
    if len(data._in_l):
        pr = ext[data._in_r]
        pl = ext[data._in_l]
        if np.any(pr <= pl):
            return -np.inf
        total += float(np.dot(data._in_w, pr + log1mexp(pl - pr)))
    return total


def in_domain(data: ReducedData, phi) -> bool:
    """True iff every observation has positive probability under ``phi``."""
    phi = _check_len(data, phi)
    if not np.all(np.isfinite(phi)):
        return False
    ext = _extended(phi)
    if len(data._ro_l) and np.any(ext[data._ro_l] >= 0.0):
        return False
    if len(data._in_l) and np.any(ext[data._in_r] <= ext[data._in_l]):
        return False
    return True


def _require_domain(data, phi):
    if not in_domain(data, phi):
        raise DomainError("phi is outside dom(l): some observation has zero probability")


def grad(data: ReducedData, phi) -> np.ndarray:
    """Gradient of ``l`` with respect to ``phi`` (length m)."""
    phi = _check_len(data, phi)
    _require_domain(data, phi)
    ext = _extended(phi)
    size = data.m + 2
    g = np.bincount(data._lo_r, weights=data._lo_w, minlength=size)
    if len(data._ro_l):
        pl = ext[data._ro_l]
        g -= np.bincount(data._ro_l, weights=data._ro_w / np.expm1(-pl), minlength=size)
    if len(data._in_l):
        gap = ext[data._in_r] - ext[data._in_l]
        g += np.bincount(data._in_r, weights=-data._in_w / np.expm1(-gap), minlength=size)
        g -= np.bincount(data._in_l, weights=data._in_w / np.expm1(gap), minlength=size)
    return g[1 : data.m + 1]


def _curvature(x):
    # e^x / (e^x - 1)^2 for x > 0, written to stay finite for tiny and large x
    return 1.0 / (np.expm1(x) * -np.expm1(-x))


def hess_diag(data: ReducedData, phi) -> np.ndarray:
    """Diagonal of the Hessian of ``l``; every entry is <= 0."""
    phi = _check_len(data, phi)
    _require_domain(data, phi)
    ext = _extended(phi)
    size = data.m + 2
    h = np.zeros(size)
    if len(data._ro_l):
        pl = ext[data._ro_l]
        h -= np.bincount(data._ro_l, weights=data._ro_w * _curvature(-pl), minlength=size)
    if len(data._in_l):
        c = data._in_w * _curvature(ext[data._in_r] - ext[data._in_l])
        h -= np.bincount(data._in_r, weights=c, minlength=size)
        h -= np.bincount(data._in_l, weights=c, minlength=size)
    return h[1 : data.m + 1]


def hess_pairs(data: ReducedData, phi):
    """Off-diagonal Hessian entries of ``l``.

    Only observations with both indices on the grid couple two coordinates.
    Returns ``(l, r, c)`` with 1-based indices and ``c = d^2 l / d phi_l d phi_r``
    (one entry per such observation, all ``>= 0``).
    """
    phi = _check_len(data, phi)
    _require_domain(data, phi)
    ext = _extended(phi)
    c = data._in_w * _curvature(ext[data._in_r] - ext[data._in_l])
    return data._in_l, data._in_r, c
