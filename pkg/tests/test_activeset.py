import math

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import random_data
from iclogcdf.activeset import (
    active_set,
    basis_matrix,
    certificate,
    conditional_optimize,
    constraint_matrix,
    constraint_values,
    fit_logconcave,
    in_cone,
    knot_scores,
    mix_step,
    violation,
)
from iclogcdf.exceptions import InfeasibleStart
from iclogcdf.likelihood import grad, loglik
from iclogcdf.npmle import initial_phi
from iclogcdf.reduce import reduce_intervals


def dense_v(tau, i):
    """v_i written out from its three-term definition (1-based i)."""
    m = len(tau)
    v = np.zeros(m)
    if i == m:
        v[m - 2], v[m - 1] = 1.0, -1.0
        return v
    d_i = tau[i - 1] - tau[i - 2]
    d_next = tau[i] - tau[i - 1]
    v[i - 2] = 1 / d_i
    v[i - 1] = -(1 / d_next + 1 / d_i)
    v[i] = 1 / d_next
    return v


def dense_b(tau, j):
    if j == 1:
        return np.ones(len(tau))
    return np.array([min(t - tau[j - 1], 0.0) for t in tau])


def test_violation_examples():
    tau = np.array([1.0, 2.0, 3.0])
    phi = np.array([-3.0, -1.5, -1.0])
    assert violation(tau, phi, 2) == pytest.approx(-1.0)
    assert violation(tau, phi, 3) == pytest.approx(phi[1] - phi[2])
    lin = 0.3 * np.array([1.0, 2.5, 4.0, 7.0]) - 5
    vals = constraint_values([1.0, 2.5, 4.0, 7.0], lin)
    np.testing.assert_allclose(vals[2:4], 0.0, atol=1e-14)
    with pytest.raises(IndexError):
        violation(tau, phi, 1)
    with pytest.raises(IndexError):
        violation(tau, phi, 4)


@pytest.mark.parametrize("seed", range(10))
def test_dense_bases(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    tau = np.cumsum(rng.uniform(0.1, 2.0, m))
    V = np.array([dense_v(tau, i) for i in range(2, m + 1)])
    B = np.array([dense_b(tau, j) for j in range(1, m + 1)]).T
    np.testing.assert_allclose(constraint_matrix(tau)[2:], V)
    np.testing.assert_allclose(basis_matrix(tau), B)
    G = V @ B  # rows i = 2..m, columns j = 1..m
    for r, i in enumerate(range(2, m + 1)):
        for j in range(1, m + 1):
            if i == j:
                assert G[r, j - 1] < 0
            else:
                assert abs(G[r, j - 1]) < 1e-12
    phi = rng.normal(size=m)
    for i in range(2, m + 1):
        assert violation(tau, phi, i) == pytest.approx(dense_v(tau, i) @ phi)


def test_knot_scores_example():
    np.testing.assert_allclose(knot_scores([1, 2, 4], [1, 1, 1]), [3, -1, -5])


@pytest.mark.parametrize("seed", range(10))
def test_knot_scores_dense(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 21))
    tau = np.cumsum(rng.uniform(0.1, 2.0, m))
    x = rng.normal(size=m)
    dense = np.array([dense_b(tau, j) @ x for j in range(1, m + 1)])
    np.testing.assert_allclose(knot_scores(tau, x), dense, rtol=1e-12, atol=1e-12)


def test_mix_step_example():
    tau = [1.0, 2.0, 3.0]
    t, mixed, blocking = mix_step(tau, [-3, -1.5, -1], [-1, -1.5, -1])
    assert t == pytest.approx(0.5)
    np.testing.assert_allclose(mixed, [-2, -1.5, -1])
    assert blocking == 2
    assert violation(tau, mixed, 2) == pytest.approx(0.0, abs=1e-12)


def test_mix_step_minimum_ratio():
    tau = np.arange(1.0, 6.0)
    phi = np.array([-4.0, -2.5, -1.5, -0.8, -0.5])
    assert in_cone(tau, phi)
    cand = np.array([-4.0, -3.5, -1.0, -0.9, -0.2])
    c0, c1 = constraint_values(tau, phi), constraint_values(tau, cand)
    viol = [i for i in range(2, 5) if c1[i] > 0]
    assert len(viol) >= 2
    ratios = [-c0[i] / (c1[i] - c0[i]) for i in viol]
    t, mixed, blocking = mix_step(tau, phi, cand)
    assert t == pytest.approx(min(ratios))
    assert blocking == viol[int(np.argmin(ratios))]


def test_mix_step_rejects_feasible():
    with pytest.raises(ValueError):
        mix_step([1.0, 2.0, 3.0], [-3, -1.5, -1], [-3, -1.5, -1])


@pytest.mark.parametrize("seed", range(30))
def test_mix_step_random(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 10))
    tau = np.cumsum(rng.uniform(0.2, 2.0, m))
    slopes = np.sort(rng.uniform(0.0, 2.0, m - 1))[::-1]
    phi = -5 + np.concatenate(([0.0], np.cumsum(slopes * np.diff(tau))))
    cand = np.sort(phi + rng.normal(scale=0.8, size=m))
    if in_cone(tau, cand):
        return
    t, mixed, _ = mix_step(tau, phi, cand)
    assert 0 <= t < 1
    V = constraint_matrix(tau)[2:m]
    assert np.all(V @ mixed <= 1e-12)


def test_conditional_optimize_tiny(tiny):
    phi, knots, _ = conditional_optimize(tiny, np.log([0.2, 0.9]))
    np.testing.assert_allclose(phi, [math.log(2 / 3), 0.0], atol=1e-6)


def test_conditional_optimize_fixed_point(tiny):
    opt = np.array([math.log(2 / 3), 0.0])
    phi, _, n_sub = conditional_optimize(tiny, opt)
    np.testing.assert_allclose(phi, opt, atol=1e-12)
    assert n_sub == 1


@pytest.mark.parametrize("seed", range(10))
def test_conditional_optimize_result(seed):
    rng = np.random.default_rng(seed)
    d = reduce_intervals(random_data(rng, n_obs=30, n_points=10))
    phi0, _ = initial_phi(d)
    phi, knots, n_sub = conditional_optimize(d, phi0)
    assert in_cone(d.tau, phi)
    assert loglik(d, phi) >= loglik(d, phi0) - 1e-12
    assert n_sub <= d.m
    assert set(knots.active.tolist()) >= set(active_set(d.tau, phi)) - set(knots.knots.tolist())


def test_fit_tiny(tiny):
    res = fit_logconcave(tiny, np.log([0.2, 0.9]))
    np.testing.assert_allclose(np.exp(res.phi), [2 / 3, 1.0], atol=1e-6)
    assert res.stop_reason in ("certificate", "loglik")


def test_fit_rejects_infeasible(tiny):
    with pytest.raises(InfeasibleStart):
        fit_logconcave(tiny, [-0.5, -0.5])
    with pytest.raises(InfeasibleStart):
        fit_logconcave(tiny, [-0.5, 0.1])
    d = reduce_intervals([(0, 1), (1, 2), (2, 3)])
    with pytest.raises(InfeasibleStart):
        fit_logconcave(d, [-3.0, -2.9, -0.1])  # convex kink, outside the cone


def slsqp_oracle(data, starts):
    """Independent maximiser of l over the cone via SLSQP, best of several starts."""
    tau = data.tau
    m = data.m
    V = np.array([dense_v(tau, i) for i in range(2, m + 1)]) if m > 1 else np.zeros((0, m))
    cons = [{"type": "ineq", "fun": lambda p: -(V @ p)}] if m > 1 else []
    bounds = [(-30, 0)] * m

    def obj(p):
        val = loglik(data, p)
        return 1e6 if not np.isfinite(val) else -val

    best = None
    for s in starts:
        r = minimize(obj, s, method="SLSQP", constraints=cons, bounds=bounds,
                     options={"ftol": 1e-14, "maxiter": 2000})
        if best is None or r.fun < best.fun:
            best = r
    return best.x, -best.fun


@pytest.mark.parametrize("seed", range(12))
def test_fit_matches_slsqp(seed):
    rng = np.random.default_rng(1000 + seed)
    d = reduce_intervals(random_data(rng, n_obs=25, n_points=6))
    phi0, _ = initial_phi(d)
    res = fit_logconcave(d, phi0)
    _, best = slsqp_oracle(d, [phi0, res.phi])
    assert res.loglik >= best - 1e-7
    cert_act, cert_knot, _ = certificate(d, res.phi, res.knots)
    assert cert_act <= 1e-8 and cert_knot <= 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_fit_invariants(seed):
    rng = np.random.default_rng(2000 + seed)
    d = reduce_intervals(random_data(rng, n_obs=60, n_points=15))
    phi0, _ = initial_phi(d)
    res = fit_logconcave(d, phi0)
    assert in_cone(d.tau, res.phi) and res.phi[-1] <= 0
    assert np.all(np.diff(res.loglik_trace) >= -1e-10)
    # certificate from first principles with dense basis vectors
    g = grad(d, res.phi)
    for a in res.knots.active:
        assert dense_b(d.tau, a) @ g <= 1e-8
    for k in res.knots.knots[1:]:
        assert abs(dense_b(d.tau, k) @ g) <= 1e-6
