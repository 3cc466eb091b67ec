"""Current-status data whose inspection times were rounded to 0.1.

Rounding creates many ties among the recorded times, so the unconstrained
NPMLE becomes a coarse staircase.  The log-concave fit stays smooth and its
median estimate is compared with the truth for a standard exponential.
"""
import math

import numpy as np

from iclogcdf import evaluate_F, reduce_intervals
from iclogcdf.estimator import fit_reduced
from iclogcdf.simharness import Censoring, Law, Scenario, generate

sc = Scenario(Law("exponential"), Censoring("current_status_rounded", step=0.1), N=1000, replicates=20, seed=3)
med = math.log(2.0)
vals_lc, vals_un = [], []
for rep in range(sc.replicates):
    data = reduce_intervals(generate(sc, rep))
    res = fit_reduced(data)
    vals_lc.append(evaluate_F(res, med))
    j = np.searchsorted(res.tau, med, side="right") - 1
    vals_un.append(res.F_un[j] if j >= 0 else 0.0)
print(f"distinct inspection times in the last replicate: {data.m}")
for name, v in (("log-concave", vals_lc), ("unconstrained", vals_un)):
    v = np.array(v)
    print(f"{name:14s} F_hat(median): mean {v.mean():.4f}  sd {v.std(ddof=1):.4f}  (truth 0.5)")
