"""Zero numbers (sign-change counts) and the invariant cones built from them.

For sampled data the zero number is the number of strict sign changes after
samples with |v| <= rel_tol * max|v| have been dropped; an all-zero sequence
has zero number 0.  A cone is given by a set of components that must stay
nonnegative and a list of linear combinations whose zero numbers are capped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REL_TOL = 1e-9


def zero_numbers(samples, rel_tol: float = REL_TOL) -> np.ndarray:
    """Zero number of every row of a 2-D array (vectorised over rows)."""
    v = np.atleast_2d(np.asarray(samples, dtype=float))
    if v.shape[1] == 0:
        return np.zeros(v.shape[0], dtype=int)
    scale = np.max(np.abs(v), axis=1, keepdims=True)
    sgn = np.sign(v)
    sgn[np.abs(v) <= rel_tol * scale] = 0
    # sign of the last nonzero sample at or before each position
    idx = np.where(sgn != 0, np.arange(v.shape[1]), -1)
    last = np.maximum.accumulate(idx, axis=1)
    prev = np.take_along_axis(sgn, np.maximum(last, 0), axis=1)
    prev[last < 0] = 0
    before = np.zeros_like(prev)
    before[:, 1:] = prev[:, :-1]
    changes = (sgn != 0) & (before != 0) & (sgn != before)
    return changes.sum(axis=1)


def zero_number(samples, rel_tol: float = REL_TOL) -> int:
    """Number of strict sign changes of an ordered sample sequence."""
    return int(zero_numbers(np.ravel(samples)[None, :], rel_tol)[0])


@dataclass(frozen=True)
class Combo:
    coeffs: tuple
    cap: int
    label: str = ""

    def name(self) -> str:
        if self.label:
            return self.label
        return "z(" + " ".join(f"{c:+g}*u{i + 1}" for i, c in enumerate(self.coeffs) if c) + ")"


@dataclass(frozen=True)
class ConeSpec:
    """Components in `sign_indices` (0-based) must be >= 0; each combo's zero number <= cap."""

    sign_indices: tuple = ()
    combos: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for c in self.combos:
            if c.cap < 0 or int(c.cap) != c.cap:
                raise ValueError("zero-number caps must be nonnegative integers")

    @classmethod
    def from_config(cls, block: dict) -> "ConeSpec":
        if block.get("preset") == "K":
            return cone_K(*block.get("caps", (0, 0, 0, 0)))
        if block.get("preset") == "K+":
            return cone_Kplus(block.get("cap", 0))
        combos = tuple(Combo(tuple(c["coeffs"]), int(c["cap"]), c.get("label", "")) for c in block.get("combos", ()))
        return cls(tuple(block.get("sign_indices", ())), combos)

    def to_config(self) -> dict:
        return {
            "sign_indices": list(self.sign_indices),
            "combos": [{"coeffs": list(c.coeffs), "cap": c.cap, "label": c.label} for c in self.combos],
        }


def cone_K(C1: int, C2: int, C3: int, C4: int) -> ConeSpec:
    """Caps on z(u), z(v), z(u - v), z(u + v)."""
    return ConeSpec((), (
        Combo((1, 0), C1, "z(u)"),
        Combo((0, 1), C2, "z(v)"),
        Combo((1, -1), C3, "z(u-v)"),
        Combo((1, 1), C4, "z(u+v)"),
    ))


def cone_Kplus(C3: int) -> ConeSpec:
    """u, v >= 0 and z(u - v) <= C3."""
    return ConeSpec((0, 1), (Combo((1, -1), C3, "z(u-v)"),))


def cone_KI(indices) -> ConeSpec:
    return ConeSpec(tuple(indices), ())


@dataclass
class ConeReport:
    in_cone: bool
    sign_minima: dict
    zero_numbers: dict


def combo_values(U: np.ndarray, combo: Combo) -> np.ndarray:
    c = np.asarray(combo.coeffs, float)
    if c.size != U.shape[0]:
        raise ValueError("combo length does not match the number of components")
    return c @ U


def cone_membership(state, spec: ConeSpec, tol: float = 1e-12) -> ConeReport:
    """Evaluate the sign constraints (up to -tol) and the capped zero numbers.

    `state` is a SolutionState or a component-first array sampled along the
    line or the radial profile.
    """
    U = np.atleast_2d(np.asarray(getattr(state, "fields", state), float))
    mins = {i: float(U[i].min()) for i in spec.sign_indices}
    zs = {c.name(): zero_number(combo_values(U, c)) for c in spec.combos}
    ok = all(m >= -tol for m in mins.values()) and all(zs[c.name()] <= c.cap for c in spec.combos)
    return ConeReport(in_cone=ok, sign_minima=mins, zero_numbers=zs)


def zero_number_trace(trace, spec: ConeSpec) -> dict:
    """Zero number of each configured combination at every snapshot."""
    snaps = getattr(trace, "snapshots", trace)
    out = {}
    for c in spec.combos:
        vals = np.stack([combo_values(np.atleast_2d(s.fields), c) for s in snaps])
        out[c.name()] = zero_numbers(vals)
    return out


def nonincreasing_after_first(z: np.ndarray) -> bool:
    """z[j+1] <= z[j] for every j >= 1 (the first transition is a transient)."""
    z = np.asarray(z)
    return bool(np.all(np.diff(z[1:]) <= 0)) if z.size > 2 else True


def random_in_cone(spec: ConeSpec, x: np.ndarray, N: int, rng: np.random.Generator, modes: int = 4,
                   amplitude: float = 1.0, radial: bool = False, max_tries: int = 10_000) -> np.ndarray:
    """Smooth random data in the cone, by construction plus rejection.

    Components are sums of low sine/cosine modes under an envelope vanishing at
    the far boundary; constrained components are made nonnegative by taking
    absolute values of a one-signed profile, and zero-number caps are enforced
    by rejection.
    """
    L = x[-1] - x[0]
    xi = (x - x[0]) / L
    if radial:
        envelope = np.cos(0.5 * np.pi * xi) ** 2
        basis = np.stack([np.cos(j * np.pi * xi) for j in range(modes)])
    else:
        envelope = np.sin(np.pi * xi) ** 2
        basis = np.stack([np.cos(j * np.pi * xi) for j in range(modes)])
    decay = 1.0 / (1.0 + np.arange(modes)) ** 1.5
    for _ in range(max_tries):
        coef = rng.standard_normal((N, modes)) * decay
        U = (coef @ basis) * envelope
        for i in spec.sign_indices:
            U[i] = np.abs(coef[i, 0]) * envelope + 0.3 * np.abs(U[i])
        peak = np.max(np.abs(U))
        if peak == 0:
            continue
        U *= amplitude / peak
        if cone_membership(U, spec).in_cone:
            return U
    raise RuntimeError("could not sample a state in the cone; loosen the caps or lower `modes`")


# ------------------------------------------------------------------ brute-force oracle

def alternating_length(samples) -> int:
    """Definition-level oracle: longest subsequence alternating in strict sign, minus one.

    O(n^2) dynamic programme over subsequences; exact zeros never take part.
    """
    v = list(samples)
    best_pos = [0] * len(v)
    best_neg = [0] * len(v)
    top = 0
    for i, a in enumerate(v):
        if a > 0:
            best_pos[i] = 1 + max([best_neg[j] for j in range(i)], default=0)
        elif a < 0:
            best_neg[i] = 1 + max([best_pos[j] for j in range(i)], default=0)
        top = max(top, best_pos[i], best_neg[i])
    return max(top - 1, 0)


def alternating_length_batch(v: np.ndarray) -> np.ndarray:
    """Vectorised form of `alternating_length` over the rows of an array."""
    v = np.asarray(v, float)
    rows, n = v.shape
    pos = np.zeros((rows, n), dtype=int)
    neg = np.zeros((rows, n), dtype=int)
    run_pos = np.zeros(rows, dtype=int)  # max over j < i of pos[:, j]
    run_neg = np.zeros(rows, dtype=int)
    for i in range(n):
        pos[:, i] = np.where(v[:, i] > 0, 1 + run_neg, 0)
        neg[:, i] = np.where(v[:, i] < 0, 1 + run_pos, 0)
        run_pos = np.maximum(run_pos, pos[:, i])
        run_neg = np.maximum(run_neg, neg[:, i])
    return np.maximum(np.maximum(run_pos, run_neg) - 1, 0)
