"""Active-set outer loop for the log-concave MLE.

Constraint ``i`` (``i = 2..m``) reads ``v_i . phi <= 0``.  For interior ``i``
this is "slope after tau_i <= slope before tau_i"; constraint ``m`` is
``phi_{m-1} <= phi_m``.  Active constraints are held at equality, which makes
the candidate linear through the corresponding grid points; the remaining
indices are the knots.

Optimality is certified through the basis ``b_1 = 1`` and
``b_j = min(tau - tau_j, 0)``: at the maximiser ``b_j . grad l`` vanishes on
knots and is nonpositive on active constraints.  ``b_1`` is the only basis
direction that moves ``phi_m``, so when the cap ``phi_m <= 0`` binds its score
only has to be nonnegative.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleStart, NonConvergence
from .icm import KnotSet, expand, solve_subproblem
from .likelihood import grad, in_domain, loglik
from .reduce import ReducedData

log = logging.getLogger(__name__)

# relative slack used when deciding whether a constraint is tight
TIGHT_RTOL = 1e-12


def constraint_values(tau, phi) -> np.ndarray:
    """``v_i . phi`` for ``i = 0..m``; entries 0 and 1 are NaN placeholders."""
    tau = np.asarray(tau, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m = len(tau)
    out = np.full(m + 1, np.nan)
    if m < 2:
        return out
    slope = np.diff(phi) / np.diff(tau)
    out[2:m] = slope[1:] - slope[:-1]
    out[m] = phi[m - 2] - phi[m - 1]
    return out


def _constraint_scale(tau, phi) -> np.ndarray:
    # magnitude of the terms summed in v_i . phi; rounding noise is relative to it
    tau = np.asarray(tau, dtype=float)
    a = np.abs(np.asarray(phi, dtype=float))
    m = len(tau)
    out = np.full(m + 1, np.nan)
    if m < 2:
        return out
    s = (a[1:] + a[:-1]) / np.diff(tau)
    out[2:m] = s[1:] + s[:-1]
    out[m] = a[m - 2] + a[m - 1]
    return out


def violation(tau, phi, i: int) -> float:
    """``v_i . phi`` for a single constraint index ``2 <= i <= m``."""
    m = len(tau)
    if not 2 <= i <= m:
        raise IndexError(f"constraint index must lie in 2..{m}, got {i}")
    return float(constraint_values(tau, phi)[i])


def tight_mask(tau, phi) -> np.ndarray:
    """Boolean mask over ``0..m``: constraints with ``v_i . phi >= 0`` up to rounding."""
    c = constraint_values(tau, phi)
    scale = _constraint_scale(tau, phi)
    with np.errstate(invalid="ignore"):
        mask = c >= -TIGHT_RTOL * np.maximum(scale, 1.0)
    mask[:2] = False
    return mask


def active_set(tau, phi) -> set[int]:
    """Indices ``i`` in ``2..m`` with ``v_i . phi >= 0``."""
    return set(np.flatnonzero(tight_mask(tau, phi)).tolist())


def in_cone(tau, phi) -> bool:
    """Whether ``phi`` satisfies every constraint up to rounding noise."""
    c = constraint_values(tau, phi)
    scale = _constraint_scale(tau, phi)
    with np.errstate(invalid="ignore"):
        bad = c[2:] > TIGHT_RTOL * np.maximum(scale[2:], 1.0)
    return not np.any(bad)


def knot_scores(tau, x) -> np.ndarray:
    """``b_j . x`` for ``j = 1..m`` (returned 0-based) in O(m).

    Uses ``b_2 . x = (tau_1 - tau_2) x_1`` and
    ``b_j . x = b_{j-1} . x + (tau_{j-1} - tau_j) * sum_{i<j} x_i``.
    """
    tau = np.asarray(tau, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.empty(len(x))
    out[0] = x.sum()
    if len(x) > 1:
        prefix = np.cumsum(x)[:-1]
        out[1:] = np.cumsum(-np.diff(tau) * prefix)
    return out


def basis_matrix(tau) -> np.ndarray:
    """Dense basis, column ``j-1`` holding ``b_j``; for tests and small problems."""
    tau = np.asarray(tau, dtype=float)
    B = np.minimum(tau[:, None] - tau[None, :], 0.0)
    B[:, 0] = 1.0
    return B


def constraint_matrix(tau) -> np.ndarray:
    """Dense matrix with row ``i`` equal to ``v_i`` (rows 0 and 1 are zero)."""
    tau = np.asarray(tau, dtype=float)
    m = len(tau)
    V = np.zeros((m + 1, m))
    dt = np.diff(tau)  # dt[i-2] = tau_i - tau_{i-1}
    for i in range(2, m):
        V[i, i - 2] = 1.0 / dt[i - 2]
        V[i, i - 1] = -(1.0 / dt[i - 1] + 1.0 / dt[i - 2])
        V[i, i] = 1.0 / dt[i - 1]
    if m >= 2:
        V[m, m - 2] = 1.0
        V[m, m - 1] = -1.0
    return V


def mix_step(tau, phi, cand):
    """Largest move from ``phi`` towards ``cand`` that stays in the cone.

    Only the concavity constraints ``2..m-1`` are checked; the monotone
    constraint ``m`` holds for both points by construction.

    Returns
    -------
    t : float
    mixed : ndarray
    blocking : int
        Index of the constraint that becomes tight.
    """
    tau = np.asarray(tau, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cand = np.asarray(cand, dtype=float)
    m = len(tau)
    c_phi = constraint_values(tau, phi)[2:m]
    c_cand = constraint_values(tau, cand)[2:m]
    scale = _constraint_scale(tau, cand)[2:m]
    viol = c_cand > TIGHT_RTOL * np.maximum(scale, 1.0)
    if not np.any(viol):
        raise ValueError("candidate already lies in the cone")
    num = -np.minimum(c_phi[viol], 0.0)
    ratios = num / (c_cand[viol] - c_phi[viol])
    pos = int(np.argmin(ratios))
    t = float(ratios[pos])
    blocking = int(np.flatnonzero(viol)[pos]) + 2
    return t, (1.0 - t) * phi + t * cand, blocking


def conditional_optimize(data: ReducedData, phi, active=None, icm_tol=1e-10, icm_max_iter=5000):
    """Replace a feasible ``phi`` by a conditionally optimal point.

    Alternates the ICM subproblem on the current active set with mixing steps
    back into the cone until the subproblem solution is itself feasible.  The
    active set only grows inside this loop.

    Returns
    -------
    phi : ndarray
    knots : KnotSet
    n_subproblems : int
    """
    tau = data.tau
    m = data.m
    phi = np.asarray(phi, dtype=float)
    active = set(active_set(tau, phi) if active is None else active)
    n_sub = 0
    while True:
        knots = KnotSet.from_active(tau, active)
        sol = solve_subproblem(data, knots, phi, tol=icm_tol, max_iter=icm_max_iter)
        n_sub += 1
        cand = sol.phi
        if m < 3 or in_cone(tau, cand):
            break
        t, phi, blocking = mix_step(tau, knots_project(knots, phi), cand)
        new_active = active | active_set(tau, phi) | {blocking}
        if new_active == active:
            # mixing must pin a new constraint; guard against a stalled loop
            raise NonConvergence("mixing step did not add an active constraint")
        active = new_active
    active |= active_set(tau, cand)
    return cand, KnotSet.from_active(tau, active), n_sub


def knots_project(knots: KnotSet, phi) -> np.ndarray:
    """Snap ``phi`` onto the piecewise-linear family of ``knots``."""
    return expand(knots, knots.restrict(phi))


@dataclass
class ActiveSetResult:
    """Raw output of :func:`fit_logconcave`."""

    phi: np.ndarray
    knots: KnotSet
    loglik: float
    scores: np.ndarray
    certificate_active: float
    certificate_knots: float
    outer_iterations: int
    subproblems: int
    stop_reason: str
    loglik_trace: list = field(default_factory=list)

    @property
    def certificate_residual(self) -> float:
        return max(self.certificate_active, self.certificate_knots)


def certificate(data: ReducedData, phi, knots: KnotSet):
    """Optimality residuals ``(active, knots, scores)`` at ``phi``.

    ``active`` is ``max(0, max_{a in A} b_a . grad)``; ``knots`` is the largest
    violation of the knot conditions, including the one-sided condition on
    ``b_1`` when ``phi_m = 0``.
    """
    scores = knot_scores(data.tau, grad(data, phi))
    act = knots.active
    cert_act = max(0.0, float(scores[act - 1].max())) if len(act) else 0.0
    idx = knots.knots[knots.knots > 1] - 1
    cert_knot = float(np.abs(scores[idx]).max()) if len(idx) else 0.0
    s1 = float(scores[0])
    cert_knot = max(cert_knot, max(0.0, -s1) if phi[-1] >= 0.0 else abs(s1))
    return cert_act, cert_knot, scores


def fit_logconcave(
    data: ReducedData,
    phi0,
    eta: float = 1e-10,
    max_outer: int | None = None,
    icm_tol: float = 1e-10,
    icm_max_iter: int = 5000,
    stop_on_loglik: bool = True,
) -> ActiveSetResult:
    """Active-set maximisation of ``l`` over log-concave, monotone ``phi``.

    Parameters
    ----------
    data : ReducedData
    phi0 : array of shape (m,)
        Feasible start: in the cone, ``<= 0`` and with positive likelihood.
    eta : float
        Stop once no active constraint has a basis score above ``eta``, or
        (with ``stop_on_loglik``) once an outer iteration changes ``l`` by
        less than ``eta``.
    max_outer : int, optional
        Outer iteration budget; defaults to ``10 * m``.
    """
    tau = data.tau
    m = data.m
    phi = np.asarray(phi0, dtype=float).copy()
    if phi.shape != (m,):
        raise ValueError(f"phi0 must have shape ({m},)")
    if not (in_cone(tau, phi) and phi[-1] <= 0.0 and in_domain(data, phi)):
        raise InfeasibleStart("phi0 must be log-concave, nondecreasing, <= 0 and in dom(l)")
    if max_outer is None:
        max_outer = max(10 * m, 10)

    phi, knots, n_sub = conditional_optimize(data, phi, None, icm_tol, icm_max_iter)
    cur = loglik(data, phi)
    trace = [cur]
    reason = "max_outer"
    outer = 0
    while True:
        cert_act, cert_knot, scores = certificate(data, phi, knots)
        act = knots.active
        if len(act) == 0 or scores[act - 1].max() <= eta:
            reason = "certificate"
            break
        if outer >= max_outer:
            raise NonConvergence(f"active-set loop exceeded {max_outer} outer iterations")
        best = scores[act - 1].max()
        a = int(act[np.flatnonzero(scores[act - 1] == best)[0]])
        active = set(act.tolist())
        active.discard(a)
        phi, knots, ns = conditional_optimize(data, phi, active, icm_tol, icm_max_iter)
        n_sub += ns
        outer += 1
        new = loglik(data, phi)
        trace.append(new)
        log.debug("outer %d: freed %d, loglik %.12g, knots %d", outer, a, new, knots.k)
        if stop_on_loglik and abs(new - cur) < eta:
            cur = new
            cert_act, cert_knot, scores = certificate(data, phi, knots)
            reason = "loglik"
            break
        cur = new

    return ActiveSetResult(
        phi=phi,
        knots=knots,
        loglik=cur,
        scores=scores,
        certificate_active=cert_act,
        certificate_knots=cert_knot,
        outer_iterations=outer,
        subproblems=n_sub,
        stop_reason=reason,
        loglik_trace=trace,
    )
