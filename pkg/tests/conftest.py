import numpy as np
import pytest

from iclogcdf.reduce import reduce_intervals


@pytest.fixture
def tiny():
    return reduce_intervals([(0, 1), (0, 1), (1, 2)])


def random_data(rng, n_obs=12, n_points=6, p_inf=0.2):
    """Small random interval-censored data on an integer grid."""
    pts = np.arange(n_points + 1, dtype=float)
    raw = []
    for _ in range(n_obs):
        a, b = sorted(rng.choice(pts, size=2, replace=False))
        if rng.uniform() < p_inf and a > 0:
            b = np.inf
        raw.append((a, b))
    return raw


def random_interior_phi(rng, data):
    """A strictly increasing phi < 0 that lies in dom(l)."""
    inc = rng.uniform(0.05, 1.0, data.m)
    phi = -np.cumsum(inc[::-1])[::-1]
    return phi
