"""Independent reference implementations used by the tests.

Nothing here imports the package under test: each oracle restates a
definition in the plainest possible way so that agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

# Frozen reference numbers (closed forms evaluated once).
SQRT_PI_OVER_8 = math.sqrt(math.pi) / 8  # weighted energy of the constant 2^{-1/2}, n = 1, p = 3
LEMNISCATE_K = 1.3110287771461  # int_0^1 du / sqrt(1 - u^4)
FLAT_T_P3_U5 = 0.02  # u0^{1-p} / (p - 1) for p = 3, u0 = 5


def sign_changes(seq) -> int:
    """Drop exact zeros, then count neighbours of opposite sign."""
    nz = [v for v in seq if v != 0]
    return sum(1 for a, b in zip(nz, nz[1:]) if (a > 0) != (b > 0))


def longest_alternating(seq) -> int:
    """Brute force over every subsequence: longest strictly alternating one, minus one."""
    best = 0
    idx = [i for i, v in enumerate(seq) if v != 0]
    for r in range(len(idx), 0, -1):
        for sub in itertools.combinations(idx, r):
            if all((seq[a] > 0) != (seq[b] > 0) for a, b in zip(sub, sub[1:])):
                return r - 1
    return best


def all_sign_patterns(length: int) -> np.ndarray:
    """Every sequence in {-1, 0, 1}^length as rows of an int8 array."""
    grids = np.meshgrid(*([np.array([-1, 0, 1], dtype=np.int8)] * length), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1) if length else np.zeros((1, 0), np.int8)


def doubling_ok(points, values, x0, k, chosen) -> bool:
    """Postconditions of the doubling selection, checked pair by pair."""
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.shape[0] != len(values):
        pts = pts.T
    Mk = values[chosen]
    if Mk < values[x0]:
        return False
    for j, v in enumerate(values):
        if math.dist(pts[j], pts[chosen]) <= k / Mk and v > 2 * Mk:
            return False
    return True


def exact_exponents(n: int, p) -> tuple:
    """(beta, mu) = (1/(p-1), 2 beta - (n-2)/2) as Fractions."""
    p = Fraction(p)
    beta = 1 / (p - 1)
    mu = 2 * beta - Fraction(n, 2) + 1
    return beta, mu


def sobolev(n: int) -> float:
    return math.inf if n <= 2 else (n + 2) / (n - 2)


def subcritical_pairs(ns=range(1, 7), ps=(1.5, 2.0, 3.0, 4.0)):
    return [(n, p) for n in ns for p in ps if p < sobolev(n)]


def flat_profile(t, p, T):
    """Exact flat blow-up profile ((p-1)(T-t))^{-1/(p-1)}."""
    return ((p - 1) * (T - np.asarray(t, float))) ** (-1.0 / (p - 1))


def hamiltonian_period_cubic(amplitude: float = 1.0) -> float:
    """Period of -u'' = u^3 through (u, u') = (A, 0): 4 sqrt(2) K / A."""
    return 4 * math.sqrt(2) * LEMNISCATE_K / amplitude
