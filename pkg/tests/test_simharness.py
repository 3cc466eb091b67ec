import math

import numpy as np
import pytest
from scipy import stats

from iclogcdf.simharness import Censoring, Law, Scenario, censor, censor_one, generate, run_scenario, sample_event


def test_sampler_examples():
    assert sample_event(Law("exponential", trunc=2.0), 0.5) == pytest.approx(-math.log(1 - 0.5 * (1 - math.exp(-2))), abs=1e-12)
    assert sample_event(Law("exponential", trunc=2.0), 0.5) == pytest.approx(0.566219, abs=1e-6)
    assert sample_event(Law("weibull", 2.0, 1.0), 1 - math.exp(-1)) == pytest.approx(1.0)
    assert sample_event(Law("lognormal", 1.0, 1.0), 0.5) == pytest.approx(1.0)


def test_law_validation():
    with pytest.raises(ValueError):
        Law("gamma")
    with pytest.raises(ValueError):
        Law("weibull", shape=-1)


@pytest.mark.parametrize(
    "law",
    [
        Law("weibull", 2.0, 1.0, 2.0),
        Law("exponential", 1.0, 1.0, 2.0),
        Law("loglogistic", 3.0, 1.0, 4.0),
        Law("lognormal", 1.0, 1.0, 10.0),
        Law("weibull", 0.7, 1.5),
    ],
)
def test_sampler_ks(law):
    rng = np.random.default_rng(1)
    x = sample_event(law, rng.uniform(size=100_000))
    ks = stats.kstest(x, law.cdf).statistic
    assert ks < 0.01
    if math.isfinite(law.trunc):
        assert x.max() <= law.trunc


def test_cdf_matches_scipy():
    t = np.linspace(0.01, 5, 50)
    np.testing.assert_allclose(Law("lognormal", 0.8, 2.0).cdf(t), stats.lognorm(0.8, scale=2.0).cdf(t))
    np.testing.assert_allclose(Law("loglogistic", 3.0, 1.5).cdf(t), stats.fisk(3.0, scale=1.5).cdf(t))
    np.testing.assert_allclose(Law("weibull", 2.0, 1.0).cdf(t), stats.weibull_min(2.0).cdf(t))
    tr = Law("weibull", 2.0, 1.0, 2.0)
    np.testing.assert_allclose(tr.cdf(t), np.minimum(stats.weibull_min(2.0).cdf(t) / stats.weibull_min(2.0).cdf(2.0), 1))


def test_censor_examples():
    c2 = Censoring("case2")
    assert censor_one(c2, 0.5, 0.7, 1.5) == (0.0, 0.7)
    assert censor_one(c2, 1.0, 0.7, 1.5) == (0.7, 1.5)
    assert censor_one(c2, 2.0, 0.7, 1.5) == (1.5, math.inf)
    rounded = Censoring("current_status_rounded", step=0.1)
    left, right = censor_one(rounded, 2.0, 1.23)
    assert left == pytest.approx(1.2) and right == math.inf
    # the comparison uses the true inspection time
    assert censor_one(rounded, 1.21, 1.23)[1] == pytest.approx(1.2)


def test_censor_vectorised():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 2, 500)
    left, right = censor(Censoring("case2"), x, rng)
    assert np.all(left < right)
    assert np.all((x > left) & (x <= right))
    left, right = censor(Censoring("current_status"), x, rng)
    assert np.all((left == 0) | np.isinf(right))
    left, right = censor(Censoring("current_status_rounded", step=0.1), x, rng)
    finite = np.concatenate((left[left > 0], right[np.isfinite(right)]))
    np.testing.assert_allclose(finite * 10, np.round(finite * 10), atol=1e-9)


def test_generate_deterministic():
    sc = Scenario(Law("weibull", 2.0, 1.0, 2.0), Censoring("case2", 1.0, 2.0), N=50, replicates=3, seed=4)
    assert generate(sc, 1) == generate(sc, 1)
    assert generate(sc, 0) != generate(sc, 1)


def test_scenario_validation():
    law = Law("weibull", 2.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        Scenario(law, Censoring(), N=10, replicates=0)
    with pytest.raises(ValueError):
        Scenario(law, Censoring(), N=10, replicates=1, quantiles=(0.5, 1.0))


def test_report_deterministic_and_layout():
    sc = Scenario(Law("weibull", 2.0, 1.0, 2.0), Censoring("case2", 1.0, 2.0), N=200, replicates=3, seed=7)
    a, b = run_scenario(sc), run_scenario(sc)
    assert a.to_csv(timing=False) == b.to_csv(timing=False)
    rows = a.rows(timing=False)
    assert rows[0][:4] == ["N", "estimator", "bias_0.1", "sd_0.1"]
    assert [r[1] for r in rows[1:]] == ["F_lc", "F_un"]
    assert "knots_mean" in rows[0]
    assert len(a.bias()) == 5 and np.all(a.sd() >= 0)
    assert "t_median" in a.rows(timing=True)[0]
    assert a.to_text(timing=False).count("\n") == 3


def test_parallel_matches_serial():
    sc = Scenario(Law("exponential", 1.0, 1.0, 2.0), Censoring("case2", 1.0, 2.0), N=100, replicates=2, seed=2)
    assert run_scenario(sc, workers=2).to_csv(timing=False) == run_scenario(sc).to_csv(timing=False)


def test_current_status_scenario_runs():
    sc = Scenario(Law("weibull", 2.0, 1.0), Censoring("current_status_rounded", rate=1.0, step=0.1), N=200, replicates=2)
    rep = run_scenario(sc)
    assert np.all(np.isnan(rep.l1()))
    assert np.all(np.isfinite(rep.bias()))
