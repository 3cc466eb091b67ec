import math

import numpy as np
import pytest

from conftest import random_data
from iclogcdf import FitResult, QuantileAboveRange, evaluate_F, fit, log_F, quantile


@pytest.fixture(scope="module")
def tiny_fit():
    return fit([(0, 1), (0, 1), (1, 2)])


def test_tiny_fit(tiny_fit):
    np.testing.assert_allclose(tiny_fit.F, [2 / 3, 1.0], atol=1e-6)
    assert tiny_fit.tau.tolist() == [1.0, 2.0]


def test_identical_intervals():
    res = fit([(1, 2)] * 5)
    assert res.tau.tolist() == [2.0]
    assert res.F[0] == pytest.approx(1.0)


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    raw = random_data(rng, n_obs=40, n_points=8)
    a = fit(raw)
    b = fit([raw[i] for i in rng.permutation(len(raw))])
    np.testing.assert_array_equal(a.phi_hat, b.phi_hat)
    np.testing.assert_array_equal(a.knot_indices, b.knot_indices)


def test_evaluate(tiny_fit):
    assert evaluate_F(tiny_fit, 1.5) == pytest.approx(math.sqrt(2 / 3), abs=1e-6)
    assert evaluate_F(tiny_fit, 1.5) == pytest.approx(0.816497, abs=1e-6)
    assert evaluate_F(tiny_fit, 0.5) == 0.0
    assert evaluate_F(tiny_fit, 10.0) == pytest.approx(tiny_fit.F[-1])
    assert evaluate_F(tiny_fit, 1.0) == pytest.approx(2 / 3, abs=1e-6)
    assert log_F(tiny_fit, 0.5) == -np.inf
    assert tiny_fit(1.5) == evaluate_F(tiny_fit, 1.5)


def test_quantile(tiny_fit):
    assert quantile(tiny_fit, 0.5) == 1.0
    exact = 1 + (math.log(0.8) - math.log(2 / 3)) / (0 - math.log(2 / 3))
    assert quantile(tiny_fit, 0.8) == pytest.approx(exact, abs=1e-6)
    assert quantile(tiny_fit, 0.8) == pytest.approx(1.449660, abs=1e-6)
    assert quantile(tiny_fit, 2 / 3) == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(quantile(tiny_fit, [0.5, 0.8]), [1.0, exact], atol=1e-6)
    with pytest.raises(ValueError):
        quantile(tiny_fit, 0.0)
    with pytest.raises(ValueError):
        quantile(tiny_fit, 1.0)


def test_quantile_above_range():
    res = fit([(0, 1), (1, math.inf)])
    with pytest.raises(QuantileAboveRange):
        quantile(res, 0.9)


@pytest.mark.parametrize("seed", range(6))
def test_evaluation_properties(seed):
    rng = np.random.default_rng(seed)
    res = fit(random_data(rng, n_obs=60, n_points=12))
    t = np.linspace(0, res.tau[-1] + 1, 400)
    F = evaluate_F(res, t)
    assert np.all(np.diff(F) >= -1e-15)
    slopes = np.diff(res.phi_hat) / np.diff(res.tau)
    assert np.all(np.diff(slopes) <= 1e-9)
    for j, tj in enumerate(res.tau):
        p = float(res.F[j])
        if 0 < p < 1:
            assert quantile(res, p) <= tj + 1e-12
    for p in rng.uniform(0.01, 0.99, 20):
        if p <= res.F[-1]:
            assert evaluate_F(res, quantile(res, p)) >= p - 1e-12


def test_knots_are_slope_changes():
    rng = np.random.default_rng(11)
    res = fit(random_data(rng, n_obs=80, n_points=15))
    slopes = np.diff(res.phi_hat) / np.diff(res.tau)
    # every interior grid point that is not a knot continues the previous slope
    for j in range(2, res.tau.size):
        if j not in res.knot_indices.tolist():
            assert slopes[j - 1] == pytest.approx(slopes[j - 2], rel=1e-6, abs=1e-9)


def test_json_round_trip(tiny_fit):
    text = tiny_fit.to_json()
    back = FitResult.from_json(text)
    np.testing.assert_array_equal(back.tau, tiny_fit.tau)
    np.testing.assert_array_equal(back.phi_hat, tiny_fit.phi_hat)
    np.testing.assert_array_equal(back.knot_indices, tiny_fit.knot_indices)
    np.testing.assert_array_equal(back.F_un, tiny_fit.F_un)
    d = tiny_fit.to_dict()
    for key in ("tau", "phi", "F", "knots", "loglik", "certificate_residual", "iterations", "wall_time_ms"):
        assert key in d


def test_start_options():
    rng = np.random.default_rng(5)
    raw = random_data(rng, n_obs=50, n_points=10)
    a = fit(raw, start="lcm")
    b = fit(raw, start="linear")
    assert b.start == "linear"
    np.testing.assert_allclose(a.F, b.F, atol=1e-6)
    with pytest.raises(ValueError):
        fit(raw, start="bogus")
