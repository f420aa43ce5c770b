"""Bootstrap schedules, exponent ladders, and the selection devices.

The schedule certificate lists every inequality with its slack; the exact
verifier re-checks it in rational arithmetic.  The ladder iterates the
schedule from just above mu up to (p+1) beta.  Time and point selection are
shown on small synthetic inputs.
"""

import numpy as np

from liouville_lab.machinery import (DiscreteField, bootstrap_schedule, check_doubling, cover_ball, doubling_select,
                                     ladder, time_select, verify_schedule)

sched = bootstrap_schedule(3, 3)
print(sched.table())
print("exactly verified:", verify_schedule(sched))

for n, p in ((3, 3), (1, 2)):
    lad = ladder(n, p, verify=False)
    print(f"ladder n = {n}, p = {p:g}: {lad.M} exponents from {lad.gammas[0]:.4f} to {lad.gammas[-1]:.4f}, "
          f"smallest gain {lad.min_gain:.2e}")

spikes = (0.6, 0.8)
sel = time_select(lambda s: 0.1 + sum(50 * np.exp(-((s - c) / 0.01) ** 2) for c in spikes), [0.5, 1.0],
                  gamma=0.0, eps=0.0, C1=1.0, k=4.0)
print(f"time selection: s* = {sel.s_star:.4f}, bad measure {sel.bad_measure:.3f}")

rng = np.random.default_rng(0)
pts, vals = rng.uniform(-3, 3, (200, 2)), rng.exponential(1.0, 200) ** 3
res = doubling_select(DiscreteField(pts, vals), 0, 2.0)
print(f"doubling: start 0 -> point {res.index} after {res.jumps} jumps, valid: "
      f"{check_doubling(DiscreteField(pts, vals), 0, 2.0, res)}")
print("unit balls covering a radius-8 disc:", len(cover_ball(8.0, 1.0, 2)))
