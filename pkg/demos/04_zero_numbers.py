"""Sign-change counts along a nodal coupled flow.

For the repulsive coupled system the counts of u, v, u - v and u + v do not
increase in time.  We start from random data inside the cone with all four
counts at most 4 and print the count history.
"""

import numpy as np

from liouville_lab.dynamics import HeatSolver, Line, Perturbation, SolverConfig, initial_data
from liouville_lab.nonlinearity import GradientCoupled
from liouville_lab.zeronumber import cone_K, cone_membership, nonincreasing_after_first, zero_number_trace

solver = HeatSolver(Line(10.0, "neumann", "neumann"), GradientCoupled(q=0.0, beta=1.0), Perturbation(),
                    SolverConfig(nx=400))
cone = cone_K(4, 4, 4, 4)
U0 = initial_data(solver.geometry, solver.x, 2, {"kind": "random-in-cone", "amplitude": 1.0, "modes": 4,
                                                 "cone": cone.to_config(), "seed": 7})
print("initial data in cone:", cone_membership(U0, cone).in_cone)
trace = solver.run_until(solver.state(U0), t_stop=2.0, save_every=20)
z = zero_number_trace(trace, cone)
times = np.array([s.t for s in trace.snapshots])
for label, counts in z.items():
    drops = [f"{times[i]:.3f}" for i in np.flatnonzero(np.diff(counts) < 0)]
    print(f"{label:>8}: {counts[0]} -> {counts[-1]}, nonincreasing: {nonincreasing_after_first(counts)}, "
          f"drops at t = {', '.join(drops) or '-'}")
