"""
Measuring the O(1/k) rate of the anchored iteration
===================================================

With ``mu_k = min(2/k, 1)`` the distance between consecutive iterates of the
anchored iteration decays like ``1/k``. A straight-line fit on a log-log
plot of ``||u^{k+1} - u^k||`` over ``k in [100, 1000]`` recovers the
exponent. The traces are written as CSV for external plotting.
"""

import numpy as np

from hppp.checks import rate_problem_64
from hppp.fixedpoint import Schedule, rate_fit
from hppp.toy import ToyConfig, toy_run

run = toy_run(ToyConfig((-6, 6), 1001, mu=Schedule.min_two_over_k(), anchor=(12, 10)))
gaps = run.gaps()
k = np.arange(100, 1001)
print("toy slope", np.polyfit(np.log(k), np.log(gaps[k]), 1)[0])

trace = rate_problem_64(seed=0)
slope, intercept = rate_fit(trace, "gap_norm", 100, 1000)
print("64x64 inpainting slope", slope)
trace.to_csv("rate_trace.csv", timing=False)

# The fixed-point residual ||Tu - u|| follows the same law; at 1e-4 it needs about 10^4 steps.
for mu, label in [(Schedule.min_two_over_k(), "min(2/k, 1)"), (Schedule.inverse_shift(0.05, 2), "1/(20(k+2))")]:
    fp = rate_problem_64(seed=0, n_iters=4000, mu=mu).column("fp_residual")
    print(f"{label:12s} fp residual at 1000 / 4000: {fp[999]:.2e} / {fp[-1]:.2e}")
