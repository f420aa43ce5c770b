"""Method-of-lines solver for U_t = Lap U + F(U) + Ftilde(U) in one space variable.

Supported geometries are a segment, a half-line truncated at a finite length,
and radial balls (true Dirichlet ball or a truncated stand-in for R^n).  Time
stepping is Strang splitting: a half step of the pointwise reaction with
classical RK4, a full implicit diffusion step with the L-stable SDIRK2 scheme
(one tridiagonal factorisation, two solves, all components at once), and a
second reaction half step.  The step size follows the reaction stiffness,

    dt = min(dt_max, safety / (p |U|_inf^{p-1} + |lam| + |gamma|)),

which keeps the explicit reaction resolved all the way into blow-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize_scalar

from .nonlinearity import HomogeneousGradientField

SDIRK_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)


class SolverError(RuntimeError):
    pass


class CFLViolation(SolverError):
    """Requested time step exceeds the reaction stability contract."""


class InsufficientGrowth(SolverError):
    """Trace does not grow enough to support a blow-up rate fit."""


# --------------------------------------------------------------------------- geometry

@dataclass(frozen=True)
class Geometry:
    """Computational domain [0, size] in the variable x (or r for radial kinds).

    `left`/`right` are "dirichlet" or "neumann". Radial kinds use the symmetry
    condition u_r(0) = 0 at the origin, so their `left` is "symmetric".
    """

    kind: str
    size: float
    n: int = 1
    left: str = "dirichlet"
    right: str = "dirichlet"

    def __post_init__(self):
        if self.kind not in ("line", "half-line", "radial-ball", "radial-space"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("geometry size must be positive")
        if self.kind == "half-line" and self.left != "dirichlet":
            raise ValueError("half-line runs carry a Dirichlet condition at the origin")
        if self.radial:
            if self.n < 1:
                raise ValueError("radial dimension must be >= 1")
            if self.left != "symmetric":
                object.__setattr__(self, "left", "symmetric")
        for side in (self.left, self.right):
            if side not in ("dirichlet", "neumann", "symmetric"):
                raise ValueError(f"unknown boundary condition {side!r}")

    @property
    def radial(self) -> bool:
        return self.kind.startswith("radial")

    @property
    def whole_space_like(self) -> bool:
        """Stand-in for R^n: truncated radial space, or a segment with reflecting ends."""
        if self.kind == "radial-space":
            return True
        return self.kind == "line" and self.left == "neumann" and self.right == "neumann"

    def grid(self, nx: int) -> np.ndarray:
        return np.linspace(0.0, self.size, nx + 1)

    def weights(self, x: np.ndarray) -> np.ndarray:
        """Trapezoid weights for integrals over the physical domain."""
        dx = x[1] - x[0]
        w = np.full(x.size, dx)
        w[0] = w[-1] = dx / 2
        if self.radial:
            n = self.n
            sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
            # n = 1: sphere "area" 2 integrates the even extension over R
            w = w * sphere * x ** (n - 1)
        return w

    def to_config(self) -> dict:
        return {"kind": self.kind, "size": self.size, "n": self.n, "left": self.left, "right": self.right}

    @classmethod
    def from_config(cls, block: dict) -> "Geometry":
        kind = block["kind"]
        left = block.get("left", "symmetric" if kind.startswith("radial") else "dirichlet")
        return cls(kind, float(block["size"]), int(block.get("n", 1)), left, block.get("right", "dirichlet"))


def Line(length: float, left: str = "dirichlet", right: str = "dirichlet") -> Geometry:
    return Geometry("line", length, 1, left, right)


def HalfLine(length: float, right: str = "dirichlet") -> Geometry:
    return Geometry("half-line", length, 1, "dirichlet", right)


def RadialBall(n: int, radius: float) -> Geometry:
    return Geometry("radial-ball", radius, n, "symmetric", "dirichlet")


def RadialTruncatedSpace(n: int, radius: float) -> Geometry:
    """R^n approximated by a ball with far-field Dirichlet data (artificial boundary)."""
    return Geometry("radial-space", radius, n, "symmetric", "dirichlet")


def laplacian_bands(geom: Geometry, x: np.ndarray):
    """Tridiagonal second-order Laplacian as (lower, diag, upper) coefficient arrays.

    lower[i] multiplies u[i-1], upper[i] multiplies u[i+1]. Dirichlet rows are
    zero so that the boundary value never moves.
    """
    m = x.size
    dx = x[1] - x[0]
    inv = 1.0 / dx**2
    lo = np.full(m, inv)
    di = np.full(m, -2 * inv)
    up = np.full(m, inv)
    if geom.radial and geom.n > 1:
        r = x[1:-1]
        c = (geom.n - 1) / (2 * r * dx)
        lo[1:-1] -= c
        up[1:-1] += c
    if geom.left == "dirichlet":
        lo[0] = di[0] = up[0] = 0.0
    else:
        # ghost u[-1] = u[1]; at the radial origin the limit Lap u = n u_rr
        scale = geom.n if geom.left == "symmetric" else 1
        lo[0], di[0], up[0] = 0.0, -2 * inv * scale, 2 * inv * scale
    if geom.right == "dirichlet":
        lo[-1] = di[-1] = up[-1] = 0.0
    else:
        # ghost reflection; the radial first-order term vanishes with u_r = 0
        lo[-1], di[-1], up[-1] = 2 * inv, -2 * inv, 0.0
    lo[0] = 0.0
    up[-1] = 0.0
    return lo, di, up


def apply_bands(bands, V: np.ndarray) -> np.ndarray:
    """Tridiagonal matrix times V, V of shape (N, m)."""
    lo, di, up = bands
    out = di * V
    out[:, 1:] += lo[1:] * V[:, :-1]
    out[:, :-1] += up[:-1] * V[:, 1:]
    return out


# --------------------------------------------------------------------------- state

@dataclass(frozen=True)
class Perturbation:
    """Linear lower-order terms Ftilde(u, v) = (-lam u - gamma v, -lam v - gamma u)."""

    lam: float = 0.0
    gamma: float = 0.0

    def __call__(self, U: np.ndarray) -> np.ndarray:
        out = -self.lam * U
        if self.gamma != 0.0:
            if U.shape[0] != 2:
                raise ValueError("gamma coupling needs two components")
            out = out - self.gamma * U[::-1]
        return out

    @property
    def is_zero(self) -> bool:
        return self.lam == 0.0 and self.gamma == 0.0


@dataclass(frozen=True)
class SolutionState:
    t: float
    fields: np.ndarray  # (N, m)
    x: np.ndarray
    step: int = 0
    dt_last: float = 0.0
    blowup: bool = False
    reason: str = ""

    @property
    def sup_norm(self) -> float:
        return float(np.sqrt(np.max(np.sum(self.fields**2, axis=0))))

    @property
    def N(self) -> int:
        return self.fields.shape[0]


@dataclass
class SolverConfig:
    nx: int = 400
    safety: float = 0.1
    dt_max: float = 1e-3
    blowup_norm: float = 1e6
    dt_min: float = 1e-14


@dataclass
class Trace:
    """Per-step history (t, sup norm, dt) plus full snapshots at a cadence."""

    t: np.ndarray
    sup: np.ndarray
    dt: np.ndarray
    snapshots: list
    blowup: bool
    reason: str
    geometry: Geometry = None
    energy: Optional[np.ndarray] = None  # Lyapunov energy at each snapshot

    @property
    def final(self) -> SolutionState:
        return self.snapshots[-1]


@dataclass
class BlowupReport:
    T_est: float
    beta_fit: float
    fit_window: tuple
    residual: float
    log_amplitude: float
    samples: int


# --------------------------------------------------------------------------- solver

class HeatSolver:
    """Owns the discretisation of one (geometry, field, perturbation) problem."""

    def __init__(self, geometry: Geometry, field: HomogeneousGradientField,
                 perturbation: Perturbation = Perturbation(), config: SolverConfig = None):
        self.geometry = geometry
        self.field = field
        self.perturbation = perturbation
        self.config = config or SolverConfig()
        self.x = geometry.grid(self.config.nx)
        self.bands = laplacian_bands(geometry, self.x)
        self._dirichlet = np.zeros(self.x.size, dtype=bool)
        if geometry.left == "dirichlet":
            self._dirichlet[0] = True
        if geometry.right == "dirichlet":
            self._dirichlet[-1] = True

    # -- construction helpers
    def state(self, fields, t: float = 0.0) -> SolutionState:
        U = np.array(fields, dtype=float)
        if U.ndim == 1:
            U = U[None, :]
        if U.shape != (self.field.N, self.x.size):
            raise ValueError(f"initial data must have shape {(self.field.N, self.x.size)}, got {U.shape}")
        U[:, self._dirichlet] = 0.0
        return SolutionState(t=t, fields=U, x=self.x)

    def reaction(self, U: np.ndarray) -> np.ndarray:
        R = self.field.F(U)
        if not self.perturbation.is_zero:
            R = R + self.perturbation(U)
        return R

    def stable_dt(self, U: np.ndarray) -> float:
        sup = float(np.sqrt(np.max(np.sum(U**2, axis=0))))
        stiff = self.field.p * sup ** (self.field.p - 1) + abs(self.perturbation.lam) + abs(self.perturbation.gamma)
        if stiff == 0.0:
            return self.config.dt_max
        return min(self.config.dt_max, self.config.safety / stiff)

    # -- substeps
    def _rk4(self, U, h):
        f = self.reaction
        k1 = f(U)
        k2 = f(U + 0.5 * h * k1)
        k3 = f(U + 0.5 * h * k2)
        k4 = f(U + h * k3)
        return U + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def _diffuse(self, U, h):
        lo, di, up = self.bands
        g = SDIRK_GAMMA * h
        ab = np.zeros((3, di.size))
        ab[0, 1:] = -g * up[:-1]
        ab[1] = 1.0 - g * di
        ab[2, :-1] = -g * lo[1:]
        Y1 = solve_banded((1, 1), ab, U.T, check_finite=False).T
        rhs = Y1 + (1 - 2 * SDIRK_GAMMA) * h * apply_bands(self.bands, Y1)
        return solve_banded((1, 1), ab, rhs.T, check_finite=False).T

    def step(self, state: SolutionState, dt: float = None) -> SolutionState:
        """Advance one step; an explicit `dt` must respect the stability contract."""
        U = state.fields
        bound = self.stable_dt(U)
        if dt is None:
            dt = bound
        elif dt > bound * (1 + 1e-12):
            raise CFLViolation(f"dt={dt:.3e} exceeds stability bound {bound:.3e}")
        if bound < self.config.dt_min:
            return replace(state, blowup=True, reason="dt-underflow")
        with np.errstate(over="ignore", invalid="ignore"):
            V = self._rk4(U, dt / 2)
            V = self._diffuse(V, dt)
            V = self._rk4(V, dt / 2)
        V[:, self._dirichlet] = 0.0
        if not np.all(np.isfinite(V)):
            return replace(state, blowup=True, reason="non-finite")
        new = SolutionState(t=state.t + dt, fields=V, x=self.x, step=state.step + 1, dt_last=dt)
        if new.sup_norm > self.config.blowup_norm:
            new = replace(new, blowup=True, reason="sup-norm")
        return new

    def run_until(self, state: SolutionState, t_stop: float = None, sup_stop: float = None,
                  steps: int = None, save_every: int = 50,
                  save_times: Sequence[float] = None, max_steps: int = 2_000_000,
                  with_energy: bool = False) -> Trace:
        """Integrate until a stop rule, the blow-up flag or `max_steps` fires.

        Snapshots are kept every `save_every` steps, at each of `save_times`
        (the step size is clipped to land on them exactly), and at the end.
        """
        if steps is not None and steps < 0:
            raise ValueError("steps must be nonnegative")
        eps_t = 1e-13 * max(1.0, abs(state.t))
        pending = sorted(float(s) for s in (save_times or []) if s > state.t + eps_t)
        ts, sups, dts = [state.t], [state.sup_norm], [0.0]
        snaps = [state]
        cur = state
        limit = max_steps if steps is None else min(steps, max_steps)
        done = 0
        reason = ""
        while done < limit:
            if t_stop is not None and cur.t >= t_stop * (1 - 1e-14):
                break
            if sup_stop is not None and cur.sup_norm >= sup_stop:
                break
            dt = self.stable_dt(cur.fields)
            target = min([s for s in (t_stop, pending[0] if pending else None) if s is not None], default=None)
            if target is not None and cur.t + dt > target:
                dt = max(target - cur.t, 0.0)
            nxt = self.step(cur, dt)
            if nxt.blowup and nxt is not cur and nxt.reason != "sup-norm":
                cur = nxt
                reason = nxt.reason
                break
            cur = nxt
            done += 1
            ts.append(cur.t)
            sups.append(cur.sup_norm)
            dts.append(cur.dt_last)
            hit = False
            while pending and cur.t >= pending[0] * (1 - 1e-14):
                pending.pop(0)
                hit = True
            if hit or (save_every and done % save_every == 0):
                snaps.append(cur)
            if cur.blowup:
                reason = cur.reason
                break
        if snaps[-1] is not cur:
            snaps.append(cur)
        trace = Trace(t=np.array(ts), sup=np.array(sups), dt=np.array(dts), snapshots=snaps,
                      blowup=cur.blowup, reason=reason, geometry=self.geometry)
        if with_energy:
            trace.energy = np.array([self.lyapunov_energy(s) for s in snaps])
        return trace

    def lyapunov_energy(self, state: SolutionState) -> float:
        """Unscaled energy  int (|grad U|^2/2 + lam|U|^2/2 + gamma u v - G(U)) dx."""
        U = state.fields
        Ux = np.gradient(U, self.x, axis=1)
        dens = 0.5 * np.sum(Ux**2, axis=0) - np.asarray(self.field.G(U))
        if self.perturbation.lam:
            dens = dens + 0.5 * self.perturbation.lam * np.sum(U**2, axis=0)
        if self.perturbation.gamma:
            dens = dens + self.perturbation.gamma * U[0] * U[1]
        return float(np.sum(dens * self.geometry.weights(self.x)))


# --------------------------------------------------------------------------- initial data

def initial_data(geometry: Geometry, x: np.ndarray, N: int, preset: dict) -> np.ndarray:
    """Named initial-data presets: gaussian, eigenmode, flat, random-in-cone.

    Parameters are per-component amplitude lists where it makes sense.
    """
    kind = preset.get("kind")
    amp = np.broadcast_to(np.asarray(preset.get("amplitude", 1.0), dtype=float), (N,))
    if kind == "flat":
        U = np.outer(amp, np.ones_like(x))
    elif kind == "gaussian":
        center = preset.get("center", 0.0 if geometry.radial else geometry.size / 2)
        width = preset.get("width", 1.0)
        U = np.outer(amp, np.exp(-((x - center) / width) ** 2))
    elif kind == "eigenmode":
        mode = preset.get("mode", 1)
        U = np.outer(amp, np.sin(mode * math.pi * x / geometry.size))
    elif kind == "random-in-cone":
        from .zeronumber import ConeSpec, random_in_cone

        spec = ConeSpec.from_config(preset["cone"]) if "cone" in preset else ConeSpec()
        rng = np.random.default_rng(preset.get("seed", 0))
        U = random_in_cone(spec, x, N, rng, modes=preset.get("modes", 4),
                           amplitude=float(np.max(amp)), radial=geometry.radial)
    else:
        raise ValueError(f"unknown initial-data preset {kind!r}")
    U = np.array(U, dtype=float)
    if geometry.left == "dirichlet":
        U[:, 0] = 0.0
    if geometry.right == "dirichlet":
        U[:, -1] = 0.0
    return U


# --------------------------------------------------------------------------- blow-up rate

def fit_blowup_rate(trace: Trace, min_norm: float = None, min_growth: float = 100.0) -> BlowupReport:
    """Least-squares fit of log|U|_inf = c - beta log(T - t), jointly in (T, beta, c).

    The window runs from the first sample with sup norm >= `min_norm` (default
    min(10 * initial, final / 100)) to the end of the trace.
    """
    t, sup = np.asarray(trace.t, float), np.asarray(trace.sup, float)
    if t.size < 5 or sup[-1] < min_growth * sup[0]:
        raise InsufficientGrowth(f"sup norm grew by {sup[-1] / max(sup[0], 1e-300):.3g}, need {min_growth}")
    if min_norm is None:
        min_norm = min(10 * sup[0], sup[-1] / min_growth)
    start = int(np.argmax(sup >= min_norm))
    tw, sw = t[start:], sup[start:]
    if sw[-1] < min_growth * sw[0] or tw.size < 5:
        raise InsufficientGrowth("fit window does not grow by the required factor")
    if np.any(np.diff(sw) < -1e-9 * sw[1:]):
        raise InsufficientGrowth("sup norm is not monotone inside the fit window")
    y = np.log(sw)
    span = tw[-1] - tw[0]

    def solve(log_gap):
        T = tw[-1] + math.exp(log_gap)
        A = np.column_stack([np.ones_like(tw), -np.log(T - tw)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ coef
        return float(r @ r), T, coef

    # T - t_last is tiny compared to the window; search its logarithm
    lo = math.log(max(span * 1e-14, 64 * np.spacing(abs(tw[-1]))))
    hi = math.log(span * 10)
    grid = np.linspace(lo, hi, 200)
    vals = [solve(g)[0] for g in grid]
    j = int(np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = minimize_scalar(lambda g: solve(g)[0], bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    rss, T, coef = solve(res.x)
    return BlowupReport(T_est=T, beta_fit=float(coef[1]), fit_window=(float(tw[0]), float(tw[-1])),
                        residual=math.sqrt(rss / tw.size), log_amplitude=float(coef[0]), samples=int(tw.size))


def ode_flat_solution(u0: float, p: float, t):
    """Spatially constant solution of u' = u^p, u(0) = u0 > 0."""
    with np.errstate(invalid="ignore"):
        return (u0 ** (1 - p) - (p - 1) * np.asarray(t, float)) ** (-1.0 / (p - 1))
