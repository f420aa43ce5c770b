"""Shooting for radial and half-line stationary solutions of -Lap U = F(U).

Radial profiles solve U'' + (n-1)/r U' + F(U) = 0 with U(0) = xi, U'(0) = 0;
half-line profiles solve U'' + F(U) = 0 with U(0) = 0, U'(0) = xi.  Each shot
is classified as

    unbounded       |U| escaped past `escape` before r_max,
    decay-candidate |U(r_max)| + |U'(r_max)| <= decay_tol * |xi|,
    bounded         anything else (bounded, not decayed),

and always carries the sign-change counts of every component and of the
requested linear combinations.  A scan over initial values is evidence for
(never a proof of) the nonexistence statements for decaying solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .nonlinearity import HomogeneousGradientField
from .zeronumber import ConeSpec, cone_membership, zero_number

SERIES_RADIUS = 1e-4
DECAY_TOL = 1e-6


class StepFailure(RuntimeError):
    def __init__(self, msg, r_last):
        super().__init__(f"{msg} (last good r = {r_last:.6g})")
        self.r_last = r_last


@dataclass
class ShootingProfile:
    xi: np.ndarray
    n: int
    mode: str
    r: np.ndarray
    U: np.ndarray  # (N, m)
    dU: np.ndarray  # (N, m)
    classification: str
    r_escape: float = math.inf
    decay_residual: float = math.nan
    zero_numbers: dict = field(default_factory=dict)
    sol: object = None

    @property
    def is_constant(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.xi))))
        return bool(np.max(np.abs(self.U - self.U[:, :1])) <= 1e-10 * scale)

    @property
    def sign_changing(self) -> bool:
        return any(v > 0 for v in self.zero_numbers.values())

    def hamiltonian(self, field: HomogeneousGradientField) -> np.ndarray:
        """H(r) = |U'|^2/2 + G(U); nonincreasing for n > 1, conserved for n = 1."""
        return 0.5 * np.sum(self.dU**2, axis=0) + np.asarray(field.G(self.U))

    def evaluate(self, r):
        """Dense-output evaluation of (U, U') at radii r (inside the integrated range)."""
        Y = self.sol(np.asarray(r, float))
        N = self.U.shape[0]
        return Y[:N], Y[N:]


def _rhs(field: HomogeneousGradientField, n: int):
    N = field.N

    def rhs(r, Y):
        U, V = Y[:N], Y[N:]
        acc = -field.F(U)
        if n > 1:
            acc = acc - (n - 1) / r * V
        return np.concatenate([V, acc])

    return rhs


def shoot(field: HomogeneousGradientField, n: int, xi, r_max: float = 200.0, mode: str = "radial",
          rtol: float = 1e-10, atol: float = 1e-12, escape: float = None, combos=(),
          samples: int = 4001, decay_tol: float = DECAY_TOL) -> ShootingProfile:
    """Integrate one stationary profile from r = 0 to r_max (adaptive DOP853)."""
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    xi = np.atleast_1d(np.asarray(xi, float))
    if xi.size != field.N:
        raise ValueError(f"xi needs {field.N} components")
    N = field.N
    scale = float(np.linalg.norm(xi))
    if escape is None:
        escape = 1e3 * max(1.0, scale)
    if mode == "radial":
        # series start U = xi - F(xi) r^2/(2n) on [0, r0] avoids the 1/r singularity
        r0 = SERIES_RADIUS if n > 1 else 0.0
        Fxi = field.F(xi)
        Y0 = np.concatenate([xi - Fxi * r0**2 / (2 * n), -Fxi * r0 / n])
    elif mode == "half-line":
        if n != 1:
            raise ValueError("half-line shooting is one-dimensional")
        r0 = 0.0
        Y0 = np.concatenate([np.zeros(N), xi])
    else:
        raise ValueError(f"unknown mode {mode!r}")

    r_eval = np.linspace(r0, r_max, samples)
    if scale == 0.0:
        zeros = np.zeros((N, samples))
        return ShootingProfile(xi, n, mode, r_eval, zeros, zeros.copy(), "decay-candidate",
                               decay_residual=0.0, zero_numbers=_zero_numbers(zeros, combos),
                               sol=lambda r: np.zeros((2 * N,) + np.shape(r)))

    def escaped(r, Y):
        return escape - np.max(np.abs(Y[:N]))

    escaped.terminal = True
    sol = solve_ivp(_rhs(field, n), (r0, r_max), Y0, method="DOP853", rtol=rtol, atol=atol,
                    events=escaped, dense_output=True)
    if sol.status == -1:
        raise StepFailure(sol.message, float(sol.t[-1]))
    r_end = float(sol.t[-1])
    r = r_eval[r_eval <= r_end]
    Y = sol.sol(r)
    U, dU = Y[:N], Y[N:]
    if sol.status == 1:
        cls, r_escape, resid = "unbounded", r_end, math.nan
    else:
        Yend = sol.y[:, -1]
        resid = float(np.linalg.norm(Yend[:N]) + np.linalg.norm(Yend[N:]))
        cls = "decay-candidate" if resid <= decay_tol * scale else "bounded"
        r_escape = math.inf
    return ShootingProfile(xi, n, mode, r, U, dU, cls, r_escape, resid, _zero_numbers(U, combos),
                           sol=sol.sol)


def _zero_numbers(U, combos):
    out = {f"z(u{i + 1})": zero_number(U[i]) for i in range(U.shape[0])}
    for c in combos:
        out[c.name()] = zero_number(np.asarray(c.coeffs, float) @ U)
    return out


@dataclass
class ScanRow:
    xi: tuple
    classification: str
    zero_numbers: dict
    in_cone: bool
    decaying_cone_member: bool
    constant: bool
    r_escape: float
    decay_residual: float


@dataclass
class ScanTable:
    rows: list
    n: int
    field_name: str

    @property
    def headline(self) -> bool:
        """True iff some nontrivial profile decays while staying in the cone."""
        return any(r.decaying_cone_member for r in self.rows)

    def count(self, classification: str) -> int:
        return sum(r.classification == classification for r in self.rows)

    def decaying_without_sign_change(self) -> int:
        return sum(r.classification == "decay-candidate" and not any(r.zero_numbers.values())
                   and any(r.xi) for r in self.rows)

    def to_csv_rows(self):
        keys = sorted({k for r in self.rows for k in r.zero_numbers})
        header = ["xi", "classification", *keys, "in_cone", "decaying_cone_member", "constant", "r_escape",
                  "decay_residual"]
        out = [header]
        for r in self.rows:
            out.append([" ".join(f"{v:.10g}" for v in r.xi), r.classification,
                        *[r.zero_numbers.get(k, "") for k in keys], int(r.in_cone), int(r.decaying_cone_member),
                        int(r.constant), f"{r.r_escape:.10g}", f"{r.decay_residual:.6g}"])
        return out

    def markdown(self) -> str:
        lines = [f"# Shooting scan: {self.field_name}, n = {self.n}", "",
                 f"- profiles: {len(self.rows)}",
                 f"- unbounded: {self.count('unbounded')}",
                 f"- bounded, not decayed: {self.count('bounded')}",
                 f"- decay candidates: {self.count('decay-candidate')}",
                 f"- decay candidates without sign change: {self.decaying_without_sign_change()}",
                 f"- decaying cone members found: {'yes' if self.headline else 'none'}",
                 "",
                 "Decay candidates use a heuristic threshold at finite radius; this table is",
                 "numerical evidence only."]
        return "\n".join(lines) + "\n"


def scan(field: HomogeneousGradientField, n: int, xi_grid, r_max: float = 200.0,
         cone: ConeSpec = ConeSpec(), mode: str = "radial", **kw) -> ScanTable:
    """Shoot from every xi in `xi_grid` and tabulate classifications in grid order."""
    rows = []
    for xi in xi_grid:
        prof = shoot(field, n, xi, r_max, mode=mode, combos=cone.combos, **kw)
        member = cone_membership(prof.U, cone).in_cone
        nontrivial = float(np.linalg.norm(prof.xi)) > 0
        rows.append(ScanRow(
            xi=tuple(float(v) for v in np.atleast_1d(xi)),
            classification=prof.classification,
            zero_numbers=prof.zero_numbers,
            in_cone=member,
            decaying_cone_member=nontrivial and member and prof.classification == "decay-candidate",
            constant=prof.is_constant,
            r_escape=prof.r_escape,
            decay_residual=prof.decay_residual,
        ))
    return ScanTable(rows=rows, n=n, field_name=getattr(field, "name", "field"))
