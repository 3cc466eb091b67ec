"""Iterative convex minorant solver for the equality-constrained subproblem.

For an active set ``A`` the log-concave candidate is piecewise linear in
``tau`` with knots ``I = {1..m} \\ A`` and constant after the last knot, so it
is determined by its knot values ``phi_bar``.  The subproblem maximises
``l(expand(phi_bar))`` subject to ``phi_bar`` nondecreasing and ``<= 0``.
Each ICM step replaces the Hessian by a positive diagonal, projects a
scaled gradient step with weighted PAVA and backtracks until the likelihood
increases.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleStart, NonConvergence
from .isotonic import pava_increasing_capped
from .likelihood import grad, hess_diag, hess_pairs, in_domain, loglik
from .reduce import ReducedData

MAX_HALVINGS = 60
# a line search that cannot improve l on a step shorter than this is a
# numerical stall at the optimum, not a failure
STALL_STEP = 1e-6
# Newton attempts allowed once the ICM step has become negligible
MAX_LATE_POLISH = 10


class KnotSet:
    """Knot bookkeeping for an active set on a fixed grid.

    Parameters
    ----------
    tau : array of shape (m,)
        The reduced grid.
    knots : iterable of int
        1-based knot indices; index 1 is always added.

    Notes
    -----
    Grid point ``j`` depends on at most two knots, ``lo[j]`` and ``hi[j]``
    (0-based positions in ``knots``), with ``phi_j = q[j] * phi_bar[lo[j]] +
    (1 - q[j]) * phi_bar[hi[j]]``.
    """

    def __init__(self, tau, knots):
        self.tau = np.asarray(tau, dtype=float)
        m = len(self.tau)
        ks = sorted(set(int(i) for i in knots) | {1})
        if ks[0] < 1 or ks[-1] > m:
            raise ValueError(f"knot indices must lie in 1..{m}")
        self.knots = np.array(ks, dtype=np.int64)
        k = len(ks)
        j = np.arange(1, m + 1)
        seg = np.searchsorted(self.knots, j, side="right") - 1
        tail = seg == k - 1
        lo = seg.copy()
        hi = np.where(tail, seg, seg + 1)
        t_lo = self.tau[self.knots[lo] - 1]
        t_hi = self.tau[self.knots[hi] - 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(tail, 1.0, (t_hi - self.tau) / (t_hi - t_lo))
        self.lo, self.hi, self.q = lo, hi, q

    @classmethod
    def from_active(cls, tau, active):
        m = len(tau)
        active = set(int(a) for a in active)
        return cls(tau, [i for i in range(1, m + 1) if i not in active])

    @property
    def m(self) -> int:
        return len(self.tau)

    @property
    def k(self) -> int:
        return len(self.knots)

    @property
    def active(self) -> np.ndarray:
        mask = np.ones(self.m + 1, dtype=bool)
        mask[:2] = False
        mask[self.knots] = False
        return np.flatnonzero(mask)

    def restrict(self, phi) -> np.ndarray:
        """Knot values of a full vector."""
        return np.asarray(phi, dtype=float)[self.knots - 1]

    def __repr__(self):
        return f"KnotSet(m={self.m}, knots={self.knots.tolist()})"


def expand(knots: KnotSet, phi_bar) -> np.ndarray:
    """Full grid vector from knot values (linear between knots, flat after)."""
    phi_bar = np.asarray(phi_bar, dtype=float)
    if phi_bar.shape != (knots.k,):
        raise ValueError(f"phi_bar must have length {knots.k}")
    return knots.q * phi_bar[knots.lo] + (1.0 - knots.q) * phi_bar[knots.hi]


def _chain(knots: KnotSet, values, power: int) -> np.ndarray:
    k = knots.k
    a = np.bincount(knots.lo, weights=values * knots.q**power, minlength=k)
    b = np.bincount(knots.hi, weights=values * (1.0 - knots.q) ** power, minlength=k)
    return a + b


def reduced_grad(data: ReducedData, phi, knots: KnotSet) -> np.ndarray:
    """Gradient of ``phi_bar -> l(expand(phi_bar))`` by the chain rule."""
    return _chain(knots, grad(data, phi), 1)


def reduced_hess_diag(data: ReducedData, phi, knots: KnotSet, floor: bool = True) -> np.ndarray:
    """ICM weights ``d_s``: minus the reduced Hessian diagonal without mixed terms.

    With ``floor=True`` entries are raised to ``1e-8 * max(1, max d)`` so the
    quadratic model stays strictly convex when some knots only enter
    linearly.
    """
    d = -_chain(knots, hess_diag(data, phi), 2)
    if floor:
        d = np.maximum(d, 1e-8 * max(1.0, float(d.max(initial=0.0))))
    return d


def reduced_hessian(data: ReducedData, phi, knots: KnotSet) -> np.ndarray:
    """Full ``k x k`` Hessian of ``phi_bar -> l(expand(phi_bar))``."""
    k = knots.k
    lo, hi, q = knots.lo, knots.hi, knots.q
    H = np.zeros(k * k)
    h = hess_diag(data, phi)
    for a, wa in ((lo, q), (hi, 1.0 - q)):
        for b, wb in ((lo, q), (hi, 1.0 - q)):
            np.add.at(H, a * k + b, h * wa * wb)
    il, ir, c = hess_pairs(data, phi)
    il, ir = il - 1, ir - 1
    for a, wa in ((lo[il], q[il]), (hi[il], 1.0 - q[il])):
        for b, wb in ((lo[ir], q[ir]), (hi[ir], 1.0 - q[ir])):
            cw = c * wa * wb
            np.add.at(H, a * k + b, cw)
            np.add.at(H, b * k + a, cw)
    return H.reshape(k, k)


def _newton_polish(data, knots, bar, cur):
    """Newton step on the level blocks of ``bar`` with the exact reduced Hessian.

    Tied knots move together and knots at the cap stay there; the step is
    shortened to keep the block order and then backtracked.  Returns the
    improved ``(bar, phi, loglik)`` or ``None``.
    """
    # blocks in knot order; near-equal neighbours count as tied
    tie = np.diff(bar) <= 1e-13 * (1.0 + np.abs(bar[1:]))
    block = np.concatenate(([0], np.cumsum(~tie)))
    levels = np.bincount(block, bar) / np.bincount(block)
    if np.any(np.diff(levels) <= 0):
        return None
    free = levels < 0.0  # only the last block can sit at the cap
    nb = int(free.sum())
    if nb == 0:
        return None
    P = np.zeros((knots.k, nb))
    rows = np.flatnonzero(free[block])
    P[rows, block[rows]] = 1.0
    phi = expand(knots, bar)
    g = P.T @ reduced_grad(data, phi, knots)
    H = P.T @ reduced_hessian(data, phi, knots) @ P
    try:
        step = np.linalg.lstsq(-H, g, rcond=1e-12)[0]
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(step)) or g @ step <= 0:
        return None
    # free levels are sorted and all below the cap; keep them ordered and <= 0
    vals = levels[free]
    ends = np.append(vals, 0.0)
    dv = np.append(step, 0.0)
    rel = np.diff(dv)
    gaps = np.diff(ends)
    shrink = rel < 0
    t = 1.0
    if np.any(shrink):
        t = min(t, float(np.min(gaps[shrink] / -rel[shrink])))
    if t <= 0:
        return None
    t *= 0.999 if t < 1.0 else 1.0
    for _ in range(30):
        new_levels = levels.copy()
        new_levels[free] = vals + t * step
        trial_bar = new_levels[block]
        trial = expand(knots, trial_bar)
        val = loglik(data, trial)
        if val > cur or _flat_ascent(data, knots, trial, trial_bar - bar, val, cur):
            return trial_bar, trial, val
        t *= 0.5
    return None


def _flat_ascent(data, knots, trial, direction, val, cur):
    # l is concave along the segment, so a nonnegative slope at the trial point
    # certifies ascent even when the gain is below rounding
    return (
        val > -np.inf
        and val >= cur - 1e-12 * abs(cur)
        and reduced_grad(data, trial, knots) @ direction >= 0.0
    )


@dataclass
class SubproblemSolution:
    """Output of :func:`solve_subproblem`."""

    phi: np.ndarray
    phi_bar: np.ndarray
    loglik: float
    iterations: int
    last_step: float
    kkt_residual: float


def solve_subproblem(
    data: ReducedData,
    knots: KnotSet,
    phi_start,
    tol: float = 1e-10,
    max_iter: int = 5000,
    newton: bool = True,
) -> SubproblemSolution:
    """Maximise ``l`` over the piecewise-linear family defined by ``knots``.

    The start is projected onto the family by keeping its knot values.  With
    ``newton=True`` every accepted ICM step is followed by a Newton step on
    its level blocks (kept only if it increases ``l``); diagonal ICM alone
    crawls when an observation with a tiny gap couples two knots.

    Raises
    ------
    InfeasibleStart
        If the projected start is not monotone, exceeds 0 or has zero
        likelihood.
    NonConvergence
        If ``max_iter`` ICM steps do not meet the tolerance, or a line search
        fails on a step that is not negligibly small.
    """
    bar = knots.restrict(phi_start).copy()
    slack = 1e-12 * (1.0 + np.abs(bar))
    if np.any(np.diff(bar) < -slack[1:]) or bar[-1] > slack[-1]:
        raise InfeasibleStart("start is not nondecreasing and <= 0 at the knots")
    # absorb rounding left over from mixing steps
    bar = np.minimum(np.maximum.accumulate(bar), 0.0)
    phi = expand(knots, bar)
    if not in_domain(data, phi):
        raise InfeasibleStart("start has zero likelihood")
    cur = loglik(data, phi)

    step = np.inf
    kkt = np.inf
    late = 0
    for it in range(1, max_iter + 1):
        g = reduced_grad(data, phi, knots)
        d = reduced_hess_diag(data, phi, knots)
        cand = pava_increasing_capped(bar + g / d, d, 0.0)
        direction = cand - bar
        step = float(np.max(np.abs(direction)))
        kkt = float(np.max(d * np.abs(direction)))
        if step < tol or kkt < tol:
            # a short step under large curvature can hide a non-negligible
            # gradient; let the Newton step try to close it
            late += 1
            polish = newton and kkt >= tol and late <= MAX_LATE_POLISH
            polished = _newton_polish(data, knots, bar, cur) if polish else None
            if polished is None:
                return SubproblemSolution(phi, bar, cur, it, step, kkt)
            bar, phi, cur = polished
            continue

        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial_bar = cand if lam == 1.0 else bar + lam * direction
            trial = expand(knots, trial_bar)
            val = loglik(data, trial)
            if val > cur or _flat_ascent(data, knots, trial, direction, val, cur):
                break
            lam *= 0.5
        else:
            if step < STALL_STEP:
                return SubproblemSolution(phi, bar, cur, it, step, kkt)
            raise NonConvergence(f"line search failed after {MAX_HALVINGS} halvings (step {step:.3g})")
        bar, phi, cur = trial_bar, trial, val
        if newton:
            polished = _newton_polish(data, knots, bar, cur)
            if polished is not None:
                bar, phi, cur = polished

    raise NonConvergence(f"ICM did not converge in {max_iter} iterations (step {step:.3g})")
