"""
Anchors decide the limit, starting points do not
================================================

The one-dimensional saddle problem ``min_x max_y x*y + max(-x, 0) - g*(y)``
has a whole ray of saddle points, ``{(x, 0) : x >= 1}``. The relaxed
iteration settles on some point of the ray that depends on where it
started. The anchored iteration converges to the point of the ray closest
to the anchor in the seminorm ``|x - y|``.
"""

import numpy as np

from hppp.fixedpoint import Schedule
from hppp.toy import ToyConfig, toy_projection, toy_run

mu = Schedule.inverse_shift(1, 2)  # mu_k = 1 / (k + 2)

# Same start, three anchors: three different limits, each predicted in closed form.
for anchor in [(12, 10), (12, 9), (12, 8)]:
    run = toy_run(ToyConfig((-6, 6), 1000, mu=mu, anchor=anchor))
    print(f"anchor {anchor}: final ({run.final.x:.4f}, {run.final.y:.4f}), "
          f"projection {tuple(toy_projection(anchor))}")

# Same anchor, ten starting points: one limit.
rng = np.random.default_rng(0)
finals = np.array([toy_run(ToyConfig(tuple(rng.uniform(-10, 10, 2)), 1000, mu=mu, anchor=(12, 10))).final
                   for _ in range(10)])
print("ten random starts, anchor (12, 10): spread", np.ptp(finals, axis=0))

# The relaxed iteration has no anchor; its limit moves with the start.
for u0 in [(0, 0), (3, 2), (-4, 1)]:
    run = toy_run(ToyConfig(u0, 1000, relax=Schedule.constant(1.2)), "ppp")
    print(f"relaxed from {u0}: final ({run.final.x:.4f}, {run.final.y:.4f})")
