"""Shooting for radial stationary profiles.

Each profile solves U'' + (n-1)/r U' + F(U) = 0 with U(0) = xi.  The scan
classifies profiles as bounded, blowing up or decay candidates, and records
how many times they change sign; no one-signed decaying profile shows up.
"""

import numpy as np

from liouville_lab.nonlinearity import GradientCoupled, ScalarPower
from liouville_lab.stationary import scan, shoot
from liouville_lab.zeronumber import cone_K

prof = shoot(ScalarPower(p=3.0), 1, [1.0], r_max=20.0)
H = prof.hamiltonian(ScalarPower(p=3.0))
print(f"n = 1 energy drift: {np.ptp(H):.2e}")

table = scan(ScalarPower(p=3.0), 3, [[x] for x in np.linspace(0.5, 5.0, 10)])
print(table.markdown())

coupled = scan(GradientCoupled(q=0.0, beta=1.0), 3, [[c, 0.5 * c] for c in np.linspace(0.5, 3.0, 6)],
               r_max=100.0, cone=cone_K(1, 1, 1, 1))
print(coupled.markdown())
