"""Self-similar variables and the Gaussian-weighted rescaled energy.

With the frame (k, a) and beta = 1/(p-1),

    W(y, s) = (k - t)^beta U(a + y sqrt(k - t), t),    s = -log(k - t),

solves W_s = Lap W - y.grad W / 2 - beta W + F(W), and

    E(s) = 1/2 int (|grad W|^2 + beta |W|^2) rho dy - int G(W) rho dy,
    rho(y) = exp(-|y|^2 / 4),

satisfies

    dE/ds = -int |W_s|^2 rho dy                                  (dissipation)
    1/2 d/ds int |W|^2 rho = -(p+1) E + (p-1)/2 int (|grad W|^2 + beta |W|^2) rho.

One-dimensional frames live on y in [-R, R]; radial frames (a = 0) on the
radial variable in [0, R] with the n-dimensional sphere weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaincc

from .dynamics import Geometry, HeatSolver, SolutionState, Trace, fit_blowup_rate
from .nonlinearity import HomogeneousGradientField

DEFAULT_RADIUS = 12.0


class OutOfDomain(ValueError):
    """The rescaled window leaves the computational domain."""


class TruncationTooSmall(ValueError):
    """The Gaussian tail beyond the truncation radius is not negligible."""


@dataclass(frozen=True)
class RescaledFrame:
    k: float
    beta: float
    a: float = 0.0

    def s(self, t):
        t = np.asarray(t, float)
        if np.any(t >= self.k):
            raise OutOfDomain("self-similar time needs t < k")
        return -np.log(self.k - t)

    def t(self, s):
        return self.k - np.exp(-np.asarray(s, float))

    @property
    def s_anchor(self) -> float:
        """s_k = -log k, the image of t = 0."""
        return -math.log(self.k)


@dataclass
class RescaledField:
    y: np.ndarray
    W: np.ndarray  # (N, ny)
    dW: np.ndarray  # (N, ny), derivative in y
    s: float
    n: int  # 1 for line frames, the radial dimension otherwise
    radial: bool


def gaussian(y):
    return np.exp(-np.asarray(y) ** 2 / 4.0)


def y_weights(y: np.ndarray, n: int, radial: bool) -> np.ndarray:
    """Trapezoid weights times rho (and the sphere factor for radial frames)."""
    h = y[1] - y[0]
    w = np.full(y.size, h)
    w[0] = w[-1] = h / 2
    w = w * gaussian(y)
    if radial:
        w = w * (2 * math.pi ** (n / 2) / math.gamma(n / 2)) * np.abs(y) ** (n - 1)
    return w


def tail_mass(R: float, n: int) -> float:
    """int_{|y| > R} rho over R^n, i.e. (4 pi)^{n/2} Q(n/2, R^2/4)."""
    return (4 * math.pi) ** (n / 2) * float(gammaincc(n / 2, R * R / 4))


def y_grid(radius: float = DEFAULT_RADIUS, h: float = 0.02, radial: bool = False) -> np.ndarray:
    m = int(round(radius / h))
    if radial:
        return np.linspace(0.0, radius, m + 1)
    return np.linspace(-radius, radius, 2 * m + 1)


def to_selfsimilar(state: SolutionState, geometry: Geometry, frame: RescaledFrame,
                   y: np.ndarray = None, method: str = "cubic") -> RescaledField:
    """Rescale a snapshot onto a y-grid.

    The default cubic spline keeps the interpolation error smooth in s, which
    matters once W is differenced in s; "linear" interpolates U and the
    centred-difference U_x piecewise linearly.
    """
    radial = geometry.radial
    if y is None:
        y = y_grid(radial=radial)
    if radial and frame.a != 0.0:
        raise OutOfDomain("radial frames are centred at the origin")
    tau = frame.k - state.t
    if tau <= 0:
        raise OutOfDomain("snapshot time is not below the frame anchor k")
    x = state.x
    xs = frame.a + y * math.sqrt(tau)
    tol = 1e-12 * geometry.size
    if xs.min() < x[0] - tol or xs.max() > x[-1] + tol:
        raise OutOfDomain(
            f"window [{xs.min():.4g}, {xs.max():.4g}] leaves the domain [{x[0]:.4g}, {x[-1]:.4g}]")
    U = state.fields
    amp = tau**frame.beta
    if method == "cubic":
        bc = ((1, 0.0), "not-a-knot") if radial else "not-a-knot"
        spl = CubicSpline(x, U, axis=1, bc_type=bc)
        W = spl(xs) * amp
        dW = spl(xs, 1) * amp * math.sqrt(tau)
    elif method == "linear":
        Ux = np.gradient(U, x, axis=1, edge_order=2)
        if radial:
            Ux[:, 0] = 0.0
        W = np.stack([np.interp(xs, x, u) for u in U]) * amp
        dW = np.stack([np.interp(xs, x, g) for g in Ux]) * amp * math.sqrt(tau)
    else:
        raise ValueError(f"unknown interpolation method {method!r}")
    return RescaledField(y=y, W=W, dW=dW, s=float(-math.log(tau)), n=geometry.n if radial else 1,
                         radial=radial)


def from_selfsimilar(rf: RescaledField, frame: RescaledFrame, x: np.ndarray) -> np.ndarray:
    """Inverse map back to U on the physical grid (only where the window covers x)."""
    tau = math.exp(-rf.s)
    ys = (x - frame.a) / math.sqrt(tau)
    return np.stack([np.interp(ys, rf.y, w, left=np.nan, right=np.nan) for w in rf.W]) / tau**frame.beta


@dataclass
class EnergyParts:
    E: float
    mass: float  # 1/2 int |W|^2 rho
    gradterm: float  # int (|grad W|^2 + beta |W|^2) rho
    potential: float  # int G(W) rho
    tail_bound: float


def weighted_energy(W, field: HomogeneousGradientField, beta: float, y: np.ndarray = None,
                    dW: np.ndarray = None, n: int = 1, radial: bool = False,
                    tail_tol: float = 1e-8) -> EnergyParts:
    """Gaussian-weighted energy of a rescaled profile.

    `W` is either a RescaledField or an (N, ny) array on the uniform grid `y`;
    without `dW` the derivative is taken by second-order differences.
    """
    if isinstance(W, RescaledField):
        y, dW, n, radial, W = W.y, W.dW, W.n, W.radial, W.W
    W = np.atleast_2d(np.asarray(W, float))
    if dW is None:
        dW = np.gradient(W, y, axis=1, edge_order=2)
    w = y_weights(y, n, radial)
    sq = np.sum(W**2, axis=0)
    gsq = np.sum(dW**2, axis=0)
    Gv = np.asarray(field.G(W), float) * np.ones_like(sq)
    R = float(np.max(np.abs(y)))
    dens = 0.5 * (gsq + beta * sq) + np.abs(Gv)
    tail = float(np.max(dens)) * tail_mass(R, n)
    if tail > tail_tol:
        raise TruncationTooSmall(f"Gaussian tail bound {tail:.3e} exceeds {tail_tol:.1e} at R={R}")
    grad = float(np.sum((gsq + beta * sq) * w))
    pot = float(np.sum(Gv * w))
    return EnergyParts(E=0.5 * grad - pot, mass=0.5 * float(np.sum(sq * w)), gradterm=grad,
                       potential=pot, tail_bound=tail)


@dataclass
class EnergyTrace:
    s: np.ndarray
    E: np.ndarray
    D: np.ndarray  # int |W_s|^2 rho
    mass: np.ndarray
    gradterm: np.ndarray
    p: float
    beta: float
    tail_bound: float = 0.0

    def rows(self):
        for row in zip(self.s, self.E, self.D, self.mass, self.gradterm):
            yield tuple(float(v) for v in row)


def energy_trace(snapshots, geometry: Geometry, frame: RescaledFrame, field: HomogeneousGradientField,
                 y: np.ndarray = None, method: str = "cubic") -> EnergyTrace:
    """Energy, dissipation, mass and gradient term along a sequence of snapshots.

    W_s is obtained by differencing the rescaled snapshots in s (second order,
    nonuniform spacing allowed), so snapshots should be dense in s.
    """
    if isinstance(snapshots, Trace):
        snapshots = snapshots.snapshots
    snaps = [st for st in snapshots if st.t < frame.k]
    if len(snaps) < 3:
        raise ValueError("need at least three snapshots below the frame anchor")
    rfs = [to_selfsimilar(st, geometry, frame, y, method) for st in snaps]
    s = np.array([rf.s for rf in rfs])
    order = np.argsort(s)
    rfs = [rfs[i] for i in order]
    s = s[order]
    parts = [weighted_energy(rf, field, frame.beta) for rf in rfs]
    Ws = np.gradient(np.stack([rf.W for rf in rfs]), s, axis=0, edge_order=2)
    w = y_weights(rfs[0].y, rfs[0].n, rfs[0].radial)
    D = np.array([float(np.sum(np.sum(ws**2, axis=0) * w)) for ws in Ws])
    return EnergyTrace(
        s=s,
        E=np.array([q.E for q in parts]),
        D=D,
        mass=np.array([q.mass for q in parts]),
        gradterm=np.array([q.gradterm for q in parts]),
        p=field.p,
        beta=frame.beta,
        tail_bound=max(q.tail_bound for q in parts),
    )


def stationary_trace(kappa: float, field: HomogeneousGradientField, beta: float, s: np.ndarray,
                     n: int = 1, radius: float = DEFAULT_RADIUS) -> EnergyTrace:
    """Energy trace of the constant profile W = kappa (no s-dependence)."""
    radial = n > 1
    y = y_grid(radius, radial=radial)
    W = np.full((field.N, y.size), kappa)
    part = weighted_energy(W, field, beta, y, np.zeros_like(W), n=n, radial=radial)
    m = np.size(s)
    return EnergyTrace(s=np.asarray(s, float), E=np.full(m, part.E), D=np.zeros(m),
                       mass=np.full(m, part.mass), gradterm=np.full(m, part.gradterm),
                       p=field.p, beta=beta, tail_bound=part.tail_bound)


@dataclass
class IdentityCheck:
    max_residual: float
    scale: float
    violations: int
    tol: float

    @property
    def relative(self) -> float:
        return self.max_residual / self.scale if self.scale > 0 else self.max_residual

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol and self.violations == 0


def _check_samples(trace: EnergyTrace):
    if trace.s.size < 3:
        raise ValueError("need at least three samples")


def verify_GK2(trace: EnergyTrace, tol: float = 1e-6) -> IdentityCheck:
    """Compare central differences of E with -D at interior samples; count increases of E beyond tol."""
    _check_samples(trace)
    dE = np.gradient(trace.E, trace.s)[1:-1]
    res = np.abs(dE + trace.D[1:-1])
    increases = int(np.sum(np.diff(trace.E) > tol))
    scale = float(max(np.max(np.abs(dE)), np.max(trace.D[1:-1]), 0.0))
    return IdentityCheck(max_residual=float(res.max()), scale=scale, violations=increases, tol=tol)


def verify_GK1(trace: EnergyTrace, tol: float = 1e-6) -> IdentityCheck:
    """Compare central differences of the mass with -(p+1)E + (p-1)/2 * gradterm at interior samples."""
    _check_samples(trace)
    dm = np.gradient(trace.mass, trace.s)[1:-1]
    rhs = (-(trace.p + 1) * trace.E + 0.5 * (trace.p - 1) * trace.gradterm)[1:-1]
    res = np.abs(dm - rhs)
    scale = float(max(np.max(np.abs(dm)), np.max(np.abs(rhs)), 0.0))
    return IdentityCheck(max_residual=float(res.max()), scale=scale, violations=0, tol=tol)


def check_energy_nonnegative(trace: EnergyTrace, tol: float = None) -> bool:
    if tol is None:
        tol = max(trace.tail_bound, 1e-12)
    return bool(np.min(trace.E) >= -tol)


def monotonicity_defect(trace: EnergyTrace) -> float:
    """Largest increase E(s_{j+1}) - E(s_j) (0 if E is nonincreasing)."""
    return float(max(np.max(np.diff(trace.E)), 0.0))


@dataclass
class EnergyChain:
    dissipation: float  # int_{a}^{a+1} D
    energy: float  # E(a)
    mean_energy: float  # int_{a-1}^{a} E
    mass_bound: float  # mass(a-1)/(p+1) + (p-1)/(2(p+1)) int_{a-1}^{a} gradterm

    def holds(self, tol: float) -> bool:
        return (self.dissipation <= self.energy + tol and self.energy <= self.mean_energy + tol
                and self.mean_energy <= self.mass_bound + tol)


def energy_chain(trace: EnergyTrace, a: float) -> EnergyChain:
    """The chain  int_a^{a+1} D <= E(a) <= int_{a-1}^a E <= mass bound  on sampled data."""
    s = trace.s
    if a - 1 < s[0] - 1e-12 or a + 1 > s[-1] + 1e-12:
        raise ValueError("chain needs samples on [a-1, a+1]")

    def integral(vals, lo, hi):
        grid = np.linspace(lo, hi, 401)
        return float(np.trapezoid(np.interp(grid, s, vals), grid))

    p = trace.p
    mass_prev = float(np.interp(a - 1, s, trace.mass))
    return EnergyChain(
        dissipation=integral(trace.D, a, a + 1),
        energy=float(np.interp(a, s, trace.E)),
        mean_energy=integral(trace.E, a - 1, a),
        mass_bound=mass_prev / (p + 1) + (p - 1) / (2 * (p + 1)) * integral(trace.gradterm, a - 1, a),
    )


def growth_bound_C0(M: int, beta: float) -> float:
    """C_0 = exp((M+1)(beta + 1/2)) controlling |W| <= C_0 k^beta for |U| <= 1; reported only."""
    return math.exp((M + 1) * (beta + 0.5))


def blowup_anchor(solver: HeatSolver, U0: np.ndarray) -> tuple[float, float]:
    """Default frame anchor (k, a): fitted blow-up time and the argmax of the final |U|."""
    trace = solver.run_until(solver.state(U0))
    if not trace.blowup:
        raise ValueError("the run does not blow up; give the frame anchor k explicitly")
    final = trace.final
    a = float(final.x[np.argmax(np.sum(final.fields**2, axis=0))])
    return float(fit_blowup_rate(trace).T_est), a


def rescaled_energy_run(solver: HeatSolver, U0: np.ndarray, frame: RescaledFrame, span: float, ds: float,
                        y: np.ndarray = None, method: str = "cubic") -> EnergyTrace:
    """Simulate with snapshots on the uniform s-grid s_anchor + [0, span] and build the energy trace."""
    if not (span > 0 and 0 < ds <= span):
        raise ValueError("need 0 < ds <= span")
    s = frame.s_anchor + np.linspace(0.0, span, int(round(span / ds)) + 1)
    times = frame.t(s)
    trace = solver.run_until(solver.state(U0), save_times=list(times), save_every=0, t_stop=float(times[-1]))
    return energy_trace(trace.snapshots, solver.geometry, frame, solver.field, y, method)
