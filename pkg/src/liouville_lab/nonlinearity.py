"""p-homogeneous gradient nonlinearities F = grad G.

Every field maps a vector U in R^N to F(U) in R^N with F(lam*U) = lam**p F(U)
for lam > 0, and carries the potential G with G(0) = 0, so that the Euler
identity F(U).U = (p+1) G(U) holds.

Evaluators accept either a single vector of shape (N,) or a stack of vectors
of shape (N, ...) (components first), which is how the solvers call them on a
whole grid at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_SEED = 20240607


def spow(u, a):
    """Signed power |u|**a * u, with the value 0 at u = 0."""
    return np.abs(u) ** a * u


@dataclass(frozen=True)
class HomogeneousGradientField:
    """Base class; subclasses provide `_F` and `_G` on component-first arrays."""

    N: int
    p: float

    name = "abstract"

    def _F(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _G(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _coerce(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=float)
        if U.ndim == 0:
            U = U.reshape(1)
        if U.shape[0] != self.N:
            raise ValueError(f"{self.name}: expected {self.N} components, got shape {U.shape}")
        return U

    def F(self, U) -> np.ndarray:
        return self._F(self._coerce(U))

    def G(self, U):
        g = self._G(self._coerce(U))
        return float(g) if np.ndim(g) == 0 else g

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ScalarPower(HomogeneousGradientField):
    """F(u) = |u|^{p-1} u."""

    p: float = 3.0
    N: int = field(default=1, init=False)
    name = "scalar-power"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")

    def _F(self, U):
        return spow(U, self.p - 1)

    def _G(self, U):
        return np.abs(U[0]) ** (self.p + 1) / (self.p + 1)

    def to_config(self):
        return {"kind": self.name, "p": self.p}


@dataclass(frozen=True)
class ScalarQuadratic(HomogeneousGradientField):
    """F(u) = u^2 (sign-indefinite: F(u) u > 0 fails for u < 0)."""

    N: int = field(default=1, init=False)
    p: float = field(default=2.0, init=False)
    name = "scalar-quadratic"

    def _F(self, U):
        return U**2

    def _G(self, U):
        return U[0] ** 3 / 3.0

    def to_config(self):
        return {"kind": self.name}


@dataclass(frozen=True)
class GradientCoupled(HomogeneousGradientField):
    """Two-component coupled system with p = 2q + 3:

        F_1 = |u1|^{2q+2} u1 + beta |u2|^{q+2} |u1|^q u1
        F_2 = |u2|^{2q+2} u2 + beta |u1|^{q+2} |u2|^q u2
    """

    q: float = 0.0
    beta: float = 1.0
    N: int = field(default=2, init=False)
    p: float = field(init=False)
    name = "gradient-coupled"

    def __post_init__(self):
        if not self.q > -1:
            raise ValueError("q must exceed -1 (p = 2q+3 > 1)")
        object.__setattr__(self, "p", 2 * self.q + 3)

    def _F(self, U):
        u1, u2 = U[0], U[1]
        q, b = self.q, self.beta
        a1, a2 = np.abs(u1), np.abs(u2)
        f1 = a1 ** (2 * q + 2) * u1 + b * a2 ** (q + 2) * spow(u1, q)
        f2 = a2 ** (2 * q + 2) * u2 + b * a1 ** (q + 2) * spow(u2, q)
        return np.stack([f1, f2])

    def _G(self, U):
        u1, u2 = U[0], U[1]
        pp1 = self.p + 1
        a1, a2 = np.abs(u1), np.abs(u2)
        return (a1**pp1 + a2**pp1) / pp1 + 2 * self.beta / pp1 * (a1 * a2) ** (self.q + 2)

    def to_config(self):
        return {"kind": self.name, "q": self.q, "beta": self.beta}


@dataclass(frozen=True)
class QuadraticSystem(HomogeneousGradientField):
    """F(u, v) = (2uv, u^2 + delta v^2), G = u^2 v + delta v^3 / 3."""

    delta: float = 1.0
    N: int = field(default=2, init=False)
    p: float = field(default=2.0, init=False)
    name = "quadratic-system"

    def _F(self, U):
        u, v = U[0], U[1]
        return np.stack([2 * u * v, u**2 + self.delta * v**2])

    def _G(self, U):
        u, v = U[0], U[1]
        return u**2 * v + self.delta * v**3 / 3.0

    def to_config(self):
        return {"kind": self.name, "delta": self.delta}


@dataclass(frozen=True)
class Custom(HomogeneousGradientField):
    """User-supplied pair of evaluators working on component-first arrays."""

    G_fn: Callable = None
    F_fn: Callable = None
    name = "custom"

    def _F(self, U):
        return np.asarray(self.F_fn(U), dtype=float)

    def _G(self, U):
        return np.asarray(self.G_fn(U), dtype=float)

    def to_config(self):
        raise TypeError("custom fields cannot be serialized")


def eval_F(field: HomogeneousGradientField, U) -> np.ndarray:
    return field.F(U)


def eval_G(field: HomogeneousGradientField, U):
    return field.G(U)


_KINDS = {
    "scalar-power": lambda c: ScalarPower(p=float(c["p"])),
    "scalar-quadratic": lambda c: ScalarQuadratic(),
    "gradient-coupled": lambda c: GradientCoupled(q=float(c.get("q", 0.0)), beta=float(c.get("beta", 1.0))),
    "quadratic-system": lambda c: QuadraticSystem(delta=float(c.get("delta", 1.0))),
}


def from_config(block: dict) -> HomogeneousGradientField:
    """Build a field from a run-config block such as {"kind": "scalar-power", "p": 3}."""
    try:
        make = _KINDS[block["kind"]]
    except KeyError:
        raise ValueError(f"unknown nonlinearity kind {block.get('kind')!r}; choose from {sorted(_KINDS)}")
    return make(block)


@dataclass
class IdentityReport:
    euler: float
    homogeneity: float
    gradient: float
    samples: int
    tol: float
    fd_tol: float

    @property
    def passed(self) -> bool:
        return self.euler <= self.tol and self.homogeneity <= self.tol and self.gradient <= self.fd_tol

    def as_dict(self) -> dict:
        return {
            "euler": self.euler,
            "homogeneity": self.homogeneity,
            "gradient": self.gradient,
            "samples": self.samples,
            "tol": self.tol,
            "fd_tol": self.fd_tol,
            "passed": self.passed,
        }


def finite_difference_gradient(field: HomogeneousGradientField, U: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of G along each component; U is (N, m)."""
    grad = np.empty_like(U)
    for i in range(field.N):
        E = np.zeros_like(U)
        E[i] = h
        grad[i] = (field.G(U + E) - field.G(U - E)) / (2 * h)
    return grad


def check_identities(
    field: HomogeneousGradientField,
    samples: int = 1000,
    tol: float = 1e-10,
    fd_tol: float = 1e-6,
    h: float = 1e-5,
    seed: int = DEFAULT_SEED,
    hyperplane_gap: float = 1e-3,
) -> IdentityReport:
    """Max residuals of homogeneity, Euler identity and F = grad G on random samples.

    U is drawn uniformly from [-2, 2]^N and lam from [0.1, 10]. Residuals are
    relative, ``|a - b| / (1 + |b|)``. The gradient check only uses points at
    least `hyperplane_gap` away from the coordinate hyperplanes.
    """
    if tol <= 0 or fd_tol <= 0:
        raise ValueError("tolerances must be positive")
    rng = np.random.default_rng(seed)
    U = rng.uniform(-2.0, 2.0, size=(field.N, samples))
    lam = rng.uniform(0.1, 10.0, size=samples)

    F = field.F(U)
    G = np.asarray(field.G(U))
    lamF = lam**field.p * F
    hom = np.linalg.norm(field.F(lam * U) - lamF, axis=0) / (1 + np.linalg.norm(lamF, axis=0))
    euler = np.abs(np.sum(F * U, axis=0) - (field.p + 1) * G) / (1 + np.abs(G))

    V = U.copy()
    near = np.abs(V) < hyperplane_gap
    V[near] = np.sign(V[near] + 0.5 * hyperplane_gap) * (hyperplane_gap + np.abs(V[near]))
    FV = field.F(V)
    grad = np.linalg.norm(finite_difference_gradient(field, V, h) - FV, axis=0) / (1 + np.linalg.norm(FV, axis=0))

    return IdentityReport(
        euler=float(euler.max()),
        homogeneity=float(hom.max()),
        gradient=float(grad.max()),
        samples=samples,
        tol=tol,
        fd_tol=fd_tol,
    )


def builtin_fields() -> list[HomogeneousGradientField]:
    """One representative of each built-in family, plus a Custom vector power."""
    return [
        ScalarPower(p=3.0),
        ScalarQuadratic(),
        GradientCoupled(q=0.0, beta=1.0),
        QuadraticSystem(delta=1.0),
        vector_power(N=3, p=2.5),
    ]


def vector_power(N: int, p: float) -> Custom:
    """Custom field G = |U|^{p+1}/(p+1), F = |U|^{p-1} U (Euclidean norm)."""

    def G_fn(U):
        return np.linalg.norm(U, axis=0) ** (p + 1) / (p + 1)

    def F_fn(U):
        return np.linalg.norm(U, axis=0) ** (p - 1) * U

    return Custom(N=N, p=p, G_fn=G_fn, F_fn=F_fn)
