"""Constructive versions of the selection devices behind the a priori estimates.

* `m_indicator` / `doubling_select`: the scale indicator
  M_U = |U|^{(p-1)/2} + |grad U|^{(p-1)/(p+1)} and doubling point selection
  on a finite point set.
* `time_select`: pick a time s* in the upper half of a unit interval at which
  every windowed integral of a family of nonnegative functions is small.
* `bootstrap_schedule` / `ladder`: the exponent bookkeeping (L, eps, delta,
  xi_l, alpha_l, omega_l) that improves an energy bound k^gamma to
  k^{gamma - delta/2}, iterated from gamma = (p+1) beta down below mu.
* `cover_ball`: explicit lattice coverings of a big ball by small balls.

`verify_schedule` is an independent checker in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

ETA = 1e-3
TIME_SAMPLES = 4096


class Infeasible(ValueError):
    """Raised when (n, p) is not subcritical, so no schedule exists."""


class NoAdmissibleTime(RuntimeError):
    def __init__(self, bad_measure: float, windows: int):
        super().__init__(f"every candidate time is excluded (bad-set measure {bad_measure:.4g} of 0.5, "
                         f"{windows} windowed constraints); check the hypotheses on X and the integrals")
        self.bad_measure = bad_measure
        self.windows = windows


def sobolev_exponent(n: int) -> float:
    """p_S(n) = (n+2)/(n-2) for n >= 3, infinity otherwise."""
    return math.inf if n <= 2 else (n + 2) / (n - 2)


def exponents(n: int, p: float) -> tuple[float, float]:
    """(beta, mu) with beta = 1/(p-1) and mu = 2 beta - (n-2)/2."""
    beta = 1.0 / (p - 1.0)
    return beta, 2 * beta - (n - 2) / 2


# ---------------------------------------------------------------- M indicator / doubling

@dataclass
class DiscreteField:
    points: np.ndarray  # (m, n) coordinates
    values: np.ndarray  # (m,) nonnegative

    def __post_init__(self):
        self.points = np.asarray(self.points, float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        self.values = np.asarray(self.values, float)
        if self.values.shape != (self.points.shape[0],):
            raise ValueError("one value per point required")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite and nonnegative")

    def distances(self, i: int) -> np.ndarray:
        return np.linalg.norm(self.points - self.points[i], axis=1)


def m_indicator(state, p: float, x=None) -> DiscreteField:
    """M_U on the grid nodes of a SolutionState (or of a raw (N, m) array with `x`).

    Gradients use second-order central differences (one-sided at the ends).
    """
    U = np.atleast_2d(np.asarray(getattr(state, "fields", state), float))
    x = np.asarray(getattr(state, "x", x), float)
    dU = np.gradient(U, x, axis=1, edge_order=2)
    absU = np.linalg.norm(U, axis=0)
    absdU = np.linalg.norm(dU, axis=0)
    return DiscreteField(x, absU ** ((p - 1) / 2) + absdU ** ((p - 1) / (p + 1)))


@dataclass
class DoublingResult:
    index: int
    point: np.ndarray
    value: float
    jumps: int
    path: list


def doubling_select(field: DiscreteField, x0, k: float) -> DoublingResult:
    """Point x_k with M(x_k) >= M(x0) and M <= 2 M(x_k) on the ball of radius k/M(x_k).

    `x0` is a point index or a coordinate (the nearest field point is used).
    Each jump goes to the largest violator of the doubling bound, so M more
    than doubles per jump and the iteration stops after at most
    log2(max M / M(x0)) + 1 jumps.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    if np.ndim(x0) == 0 and isinstance(x0, (int, np.integer)):
        cur = int(x0)
    else:
        cur = int(np.argmin(np.linalg.norm(field.points - np.atleast_1d(np.asarray(x0, float)), axis=1)))
    if not field.values[cur] > 0:
        raise ValueError("M(x0) must be positive")
    path = [cur]
    while True:
        M = field.values[cur]
        near = field.distances(cur) <= k / M
        bad = near & (field.values > 2 * M)
        if not bad.any():
            return DoublingResult(cur, field.points[cur], float(M), len(path) - 1, path)
        cand = np.flatnonzero(bad)
        cur = int(cand[np.argmax(field.values[cand])])
        path.append(cur)


def check_doubling(field: DiscreteField, x0: int, k: float, result: DoublingResult) -> bool:
    """Exhaustive scan of both postconditions (brute force over all points)."""
    Mk = field.values[result.index]
    if Mk < field.values[x0]:
        return False
    for j in range(field.values.size):
        d = math.dist(field.points[j], field.points[result.index])
        if d <= k / Mk and field.values[j] > 2 * Mk:
            return False
    return True


# ---------------------------------------------------------------- time selection

@dataclass
class TimeSelection:
    s_star: float
    survivors: float  # measure of admissible times in the upper half-interval
    bad_measure: float
    window_integrals: np.ndarray  # (X, L) integrals over the windows ending at s*
    bounds: np.ndarray  # (L,) right-hand sides C1 k^{gamma - alpha + eps}


def _sample_family(f, s: np.ndarray) -> np.ndarray:
    if callable(f):
        return np.atleast_2d(np.asarray(f(s), float))
    if isinstance(f, (list, tuple)) and f and callable(f[0]):
        return np.stack([np.asarray(g(s), float) * np.ones_like(s) for g in f])
    vals = np.atleast_2d(np.asarray(f, float))
    if vals.shape[1] != s.size:
        raise ValueError(f"sampled family needs {s.size} samples per function")
    return vals


def time_select(f, alphas, gamma: float, eps: float, C1: float, k: float, sigma: float = 0.0,
                samples: int = TIME_SAMPLES) -> TimeSelection:
    """Admissible s* in [sigma + 1/2, sigma + 1] for the window bounds.

    `f` is a callable returning an (X, m) array on a vector of times, a list
    of scalar callables, or an (X, samples + 1) array sampled on the uniform
    grid of J = [sigma, sigma + 1].  The window integral over
    [s - k^{-alpha}/2, s] is taken from cumulative trapezoid sums; a grid time
    survives if all X * L windows respect C1 k^{gamma - alpha + eps}.  The
    centre of the longest run of survivors is returned.
    """
    alphas = np.atleast_1d(np.asarray(alphas, float))
    if np.any(alphas < 0) or k < 1 or C1 <= 0:
        raise ValueError("need alpha >= 0, k >= 1 and C1 > 0")
    s = sigma + np.linspace(0.0, 1.0, samples + 1)
    vals = _sample_family(f, s)
    if np.any(vals < 0):
        raise ValueError("the family must be nonnegative")
    cum = cumulative_trapezoid(vals, s, axis=1, initial=0.0)
    upper = s >= sigma + 0.5
    su = s[upper]
    widths = 0.5 * k ** (-alphas)
    bounds = C1 * k ** (gamma - alphas + eps)
    ok = np.ones(su.size, bool)
    for w, b in zip(widths, bounds):
        lower = np.stack([np.interp(su - w, s, c) for c in cum])
        ok &= np.all(cum[:, upper] - lower <= b, axis=0)
    ds = 1.0 / samples
    if not ok.any():
        raise NoAdmissibleTime(0.5, vals.shape[0] * alphas.size)
    # longest run of consecutive survivors
    edges = np.diff(np.concatenate([[0], ok.astype(int), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    j = int(np.argmax(stops - starts))
    mid = (starts[j] + stops[j] - 1) // 2
    s_star = float(su[mid])
    wins = np.array([[np.interp(s_star, s, c) - np.interp(s_star - w, s, c) for w in widths] for c in cum])
    surv = float(ok.sum() * ds)
    return TimeSelection(s_star, surv, max(0.0, 0.5 - surv), wins, bounds)


def window_integrals_direct(fns, s_star: float, alphas, k: float, refine: int = 10,
                            samples: int = TIME_SAMPLES) -> np.ndarray:
    """Re-integrate each window ending at s* with Simpson's rule on a grid `refine` times finer (verifier)."""
    from scipy.integrate import simpson

    out = np.empty((len(fns), len(alphas)))
    for l, a in enumerate(alphas):
        w = 0.5 * k ** (-a)
        m = max(101, 2 * math.ceil(w * refine * samples / 2) + 1)
        t = np.linspace(s_star - w, s_star, m)
        for i, g in enumerate(fns):
            out[i, l] = simpson(np.asarray(g(t), float) * np.ones_like(t), x=t)
    return out


# ---------------------------------------------------------------- bootstrap schedule

def _dyadic_below(x: float) -> float:
    """Largest 2^-j (j >= 0) strictly below x (x > 0)."""
    if not x > 0:
        raise Infeasible("no positive slack available")
    j = max(0, math.floor(-math.log2(x)))
    while 2.0**-j >= x:
        j += 1
    return 2.0**-j


@dataclass
class BootstrapSchedule:
    n: int
    p: float
    beta: float
    mu: float
    gamma: float
    L: int
    L_min: int
    eps: float
    delta: float
    xi: tuple
    alpha: tuple
    omega: tuple
    eta: float = ETA
    gamma_ladder: tuple = ()
    M: int = 0

    @property
    def gain(self) -> float:
        """Exponent improvement gamma -> gamma - delta/2 delivered by one schedule."""
        return self.delta / 2

    def slacks(self) -> dict:
        """Every inequality as (name, slack); strict ones need slack > 0, others >= 0."""
        b, mu, g, p, n = self.beta, self.mu, self.gamma, self.p, self.n
        xs = list(self.xi) + [b]
        out = [("L: mu/(p+1) (2p/(p+1))^L - beta", mu / (p + 1) * (2 * p / (p + 1)) ** self.L - b, "strict"),
               ("(p+1) xi_1 <= gamma - delta", g - self.delta - (p + 1) * xs[0], "weak"),
               ("gamma_1 < mu is the ladder stop; gamma >= mu here", g - mu, "weak")]
        for l in range(self.L):
            x, a, w = xs[l], self.alpha[l], self.omega[l]
            out += [(f"xi_{l + 1} <= xi_{l + 2}", xs[l + 1] - x, "weak"),
                    (f"alpha_{l + 1} >= 0", a, "weak"),
                    (f"alpha_{l + 1} < xi_{l + 1}/beta", x / b - a, "strict"),
                    (f"xi_{l + 1} mu/beta > gamma - alpha + eps - omega", x * mu / b - (g - a + self.eps - w), "strict"),
                    (f"omega_{l + 1} - n alpha/2 <= gamma - delta - (p+1) xi_{l + 2}",
                     g - self.delta - (p + 1) * xs[l + 1] - (w - n * a / 2), "weak")]
        return {name: {"slack": float(s), "kind": kind} for name, s, kind in out}

    def certificate(self) -> dict:
        return {
            "n": self.n, "p": self.p, "beta": self.beta, "mu": self.mu, "gamma": self.gamma,
            "L": self.L, "L_min": self.L_min, "eps": self.eps, "delta": self.delta, "eta": self.eta,
            "gain": self.gain, "xi": list(self.xi), "alpha": list(self.alpha), "omega": list(self.omega),
            "gamma_ladder": list(self.gamma_ladder), "M": self.M,
            "slacks": self.slacks(), "verified": verify_schedule(self),
        }

    def table(self) -> str:
        rows = [f"n = {self.n}, p = {self.p:g}, beta = {self.beta:.6g}, mu = {self.mu:.6g}, gamma = {self.gamma:.6g}",
                f"L = {self.L} (minimal {self.L_min}), eps = {self.eps:.6g}, delta = {self.delta:.6g}, "
                f"gain = {self.gain:.6g}",
                "", f"{'l':>3} {'xi_l':>14} {'alpha_l':>14} {'omega_l':>14}"]
        for l in range(self.L):
            rows.append(f"{l + 1:>3} {self.xi[l]:14.8g} {self.alpha[l]:14.8g} {self.omega[l]:14.8g}")
        if self.gamma_ladder:
            rows += ["", f"ladder: M = {self.M}, gamma_M = {self.gamma_ladder[-1]:.6g}, "
                         f"gamma_1 = {self.gamma_ladder[0]:.6g}"]
        return "\n".join(rows)


def minimal_L(n: int, p: float) -> int:
    beta, mu = exponents(n, p)
    if not mu > 0:
        raise Infeasible(f"mu = {mu:g} <= 0")
    L = 1
    while mu / (p + 1) * (2 * p / (p + 1)) ** L <= beta:
        L += 1
    return L


def _check_subcritical(n: int, p: float):
    if not p > 1:
        raise Infeasible("p must exceed 1")
    if p >= sobolev_exponent(n):
        raise Infeasible(f"p = {p:g} is not below the critical exponent {sobolev_exponent(n):g} for n = {n}")
    if not exponents(n, p)[1] > 0:
        raise Infeasible("mu <= 0")


@lru_cache(maxsize=None)
def _safe_beta(p: float) -> float:
    """Float beta that never exceeds the exact 1/(p-1), so the cap xi <= beta holds exactly."""
    beta = 1.0 / (p - 1.0)
    return math.nextafter(beta, 0.0) if Fraction(beta) > 1 / (Fraction(p) - 1) else beta


def _build(n, p, gamma, L, eta):
    beta, mu = exponents(n, p)
    beta = _safe_beta(p)
    q = 2 * p / (p + 1)
    xi = [(1 - eta) * gamma / (p + 1)]
    for _ in range(L - 1):
        xi.append(min(beta, (1 - eta) * q * xi[-1]))
    alpha = [(1 - eta) * x / beta for x in xi]
    xs = xi + [beta]
    omega, gaps = [], []
    for l in range(L):
        lo = gamma - alpha[l] - xi[l] * mu / beta
        hi = gamma - (p + 1) * xs[l + 1] + n * alpha[l] / 2
        omega.append(0.5 * (lo + hi))
        gaps.append(hi - lo)
    return xi, alpha, omega, min(gaps)


def bootstrap_schedule(n: int, p: float, gamma: float = None, eta: float = ETA) -> BootstrapSchedule:
    """Schedule for the energy exponent `gamma` in [mu, (p+1) beta] (default: the top).

    xi_1 = (1-eta) gamma/(p+1), xi_{l+1} = min(beta, (1-eta) 2p/(p+1) xi_l),
    alpha_l = (1-eta) xi_l/beta and omega_l the midpoint of its admissible
    interval.  eps and delta are the largest powers of two below half the
    narrowest omega-interval (delta also below eta*gamma).  If the eta slack
    closes the last interval, L is raised until it opens.
    """
    _check_subcritical(n, p)
    beta, mu = exponents(n, p)
    top = (p + 1) * beta
    if gamma is None:
        gamma = top
    if not (_exact_mu(n, p) <= Fraction(gamma) <= top):
        raise ValueError(f"gamma must lie in [mu, (p+1) beta] = [{mu:g}, {top:g}]")
    L0 = minimal_L(n, p)
    L = L0
    while True:
        xi, alpha, omega, gap = _build(n, p, gamma, L, eta)
        if gap > 0:
            break
        L += 1
        if L > L0 + 64:
            raise Infeasible("the eta slack is too large for this (n, p)")
    half = 0.5 * gap
    eps = _dyadic_below(half)
    delta = _dyadic_below(min(half, eta * gamma))
    return BootstrapSchedule(n, p, beta, mu, gamma, L, L0, eps, delta, tuple(xi), tuple(alpha), tuple(omega), eta)


@lru_cache(maxsize=None)
def _exact_mu(n, p) -> Fraction:
    return 2 / (Fraction(p) - 1) - Fraction(n - 2, 2)


@lru_cache(maxsize=None)
def _exact_constants(n: int, p: float):
    """Exact beta, mu and the minimal L, from the rational value of the float p."""
    F = Fraction
    pf = F(p)
    beta = 1 / (pf - 1)
    mu = 2 * beta - F(n - 2, 2)
    ratio = 2 * pf / (pf + 1)
    Lmin = 1
    while not mu / (pf + 1) * ratio**Lmin > beta:
        Lmin += 1
        if Lmin > 10_000:
            break
    return pf, beta, mu, Lmin


def _clearly_valid(s: BootstrapSchedule, beta_x: Fraction, mu_x: Fraction) -> bool:
    """Floating-point pass that only answers True when every slack beats a rounding margin."""
    n, p1 = float(s.n), float(s.p) + 1.0
    beta, mu = float(beta_x), float(mu_x)
    g, eps, dl = s.gamma, s.eps, s.delta
    tol = 1e-12
    if not g - dl - p1 * s.xi[0] > tol * (1 + g + dl + p1 * s.xi[0]):
        return False
    if Fraction(s.xi[-1]) > beta_x:
        return False
    for l in range(s.L):
        x, a, w = s.xi[l], s.alpha[l], s.omega[l]
        nxt = s.xi[l + 1] if l + 1 < s.L else beta
        if not (x <= nxt or l + 1 == s.L) or a < 0:
            return False
        if not x / beta - a > tol * (1 + x / beta + a):
            return False
        lhs = x * mu / beta
        if not lhs - (g - a + eps - w) > tol * (1 + lhs + g + a + eps + abs(w)):
            return False
        rhs = g - dl - p1 * nxt
        if not rhs - (w - n * a / 2) > tol * (1 + g + dl + p1 * nxt + abs(w) + n * a):
            return False
    return True


def verify_schedule(s: BootstrapSchedule) -> bool:
    """Independent exact re-check of every schedule inequality.

    All floats are converted exactly to rationals and beta, mu, L are
    recomputed from (n, p); nothing is taken from the construction.  A
    floating-point pass with a rounding margin settles the clear cases; any
    inequality it cannot settle is decided in rational arithmetic.
    """
    F = Fraction
    if not (s.p > 1 and s.n >= 1):
        return False
    p, beta, mu, Lmin = _exact_constants(int(s.n), float(s.p))
    if not (mu > 0 and s.eps > 0 and s.delta > 0 and len(s.xi) == len(s.alpha) == len(s.omega) == s.L >= 1):
        return False
    # L may exceed the minimal value (extra rungs cost nothing), never undercut it
    if s.L_min != Lmin or s.L < Lmin:
        return False
    g = F(s.gamma)
    if not (mu <= g <= (p + 1) * beta):
        return False
    if _clearly_valid(s, beta, mu):
        return True
    n, eps, dl = F(s.n), F(s.eps), F(s.delta)
    xi = [F(v) for v in s.xi] + [beta]
    if not (p + 1) * xi[0] <= g - dl:
        return False
    for l in range(s.L):
        a, w = F(s.alpha[l]), F(s.omega[l])
        if not (xi[l] <= xi[l + 1] and 0 <= a < xi[l] / beta):
            return False
        if not xi[l] * mu / beta > g - a + eps - w:
            return False
        if not w - n * a / 2 <= g - dl - (p + 1) * xi[l + 1]:
            return False
    return True


@dataclass
class Ladder:
    n: int
    p: float
    gammas: tuple  # increasing: gamma_1 < gamma_2 < ... < gamma_M = (p+1) beta
    gains: tuple  # gains[m] = gammas[m+1] - gammas[m] lower bound used for the step
    mu: float
    beta: float

    @property
    def M(self) -> int:
        return len(self.gammas)

    @property
    def terminated(self) -> bool:
        """gamma_1 < mu, decided exactly."""
        return Fraction(self.gammas[0]) < _exact_mu(self.n, self.p)

    @property
    def min_gain(self) -> float:
        return min(self.gains) if self.gains else math.inf

    def verify(self) -> bool:
        """Exact check: strictly increasing, steps >= recorded gains, gamma_1 < mu <= gamma_2, top = (p+1) beta."""
        F = Fraction
        p, n = F(self.p), F(self.n)
        beta = 1 / (p - 1)
        mu = 2 * beta - (n - 2) / 2
        g = [F(v) for v in self.gammas]
        if g[-1] != (p + 1) * beta and abs(float(g[-1] - (p + 1) * beta)) > 4 * np.spacing(float(g[-1])):
            return False
        if not g[0] < mu:
            return False
        if len(g) > 1 and not g[1] >= mu:
            return False
        return all(g[m + 1] - g[m] >= F(self.gains[m]) > 0 for m in range(len(g) - 1))


def ladder(n: int, p: float, eta: float = ETA, verify: bool = True, max_steps: int = 10_000_000) -> Ladder:
    """gamma ladder from (p+1) beta down to the first value below mu.

    Each step uses the schedule at the current gamma and lowers gamma by its
    gain delta/2.  With `verify`, every schedule passes `verify_schedule`.
    """
    _check_subcritical(n, p)
    beta, mu = exponents(n, p)
    mu_exact = _exact_mu(n, p)
    g = (p + 1) * beta
    down, gains = [g], []
    while Fraction(g) >= mu_exact:
        s = bootstrap_schedule(n, p, g, eta)
        if verify and not verify_schedule(s):
            raise AssertionError(f"schedule at gamma = {g!r} failed verification")
        new = g - s.gain
        # g - new is exact in floating point (Sterbenz), so this comparison is exact
        while g - new < s.gain:
            new = math.nextafter(new, -math.inf)
        gains.append(s.gain)
        down.append(new)
        g = new
        if len(down) > max_steps:
            raise RuntimeError("ladder did not terminate")
    return Ladder(n, p, tuple(reversed(down)), tuple(reversed(gains)), mu, beta)


def uniform_gain(n: int, p: float, points: int = 65, eta: float = ETA) -> float:
    """Empirical minimum of the schedule gain over a gamma-grid on [mu, (p+1) beta]."""
    _check_subcritical(n, p)
    beta, mu = exponents(n, p)
    return min(bootstrap_schedule(n, p, g, eta).gain for g in np.linspace(mu, (p + 1) * beta, points))


# ---------------------------------------------------------------- coverings

def C_M(M: float, n: int) -> float:
    """C(M) = 8 n e^{M+1}."""
    return 8 * n * math.exp(M + 1)


def R_k(k: float, n: int) -> float:
    """R_k = sqrt(8 n log k)."""
    return math.sqrt(8 * n * math.log(k))


def cover_ball(R_big: float, r_small: float, n: int, center=None) -> np.ndarray:
    """Centres of r_small-balls covering the closed ball of radius R_big.

    Cubic lattice of spacing 2 r_small / sqrt(n): every point lies within
    r_small of the centre of its lattice cell, and only cells that can meet the
    big ball are kept.  Returns an (X, n) array.
    """
    if not (R_big > 0 and r_small > 0) or n < 1:
        raise ValueError("radii must be positive and n >= 1")
    c = np.zeros(n) if center is None else np.asarray(center, float)
    if R_big <= r_small:
        return c[None, :].copy()
    h = 2 * r_small / math.sqrt(n)
    m = math.ceil((R_big + r_small) / h)
    ax = h * np.arange(-m, m + 1)
    grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    keep = np.linalg.norm(grid, axis=1) <= R_big + r_small
    return grid[keep] + c
