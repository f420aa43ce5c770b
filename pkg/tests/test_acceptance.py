"""Acceptance criteria 1-8, each at its stated tolerance and time budget.

Every test prints a single ``ACCEPTANCE <k>: PASS|FAIL`` line (shown even
without ``-s``) before asserting, so a run of this file is a checklist:

    pytest tests/test_acceptance.py -v
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from liouville_lab.dynamics import HeatSolver, Line, SolverConfig, fit_blowup_rate, initial_data
from liouville_lab.harness import run_campaign, scaled
from liouville_lab.machinery import (DiscreteField, NoAdmissibleTime, bootstrap_schedule, doubling_select, ladder,
                                     time_select, verify_schedule, window_integrals_direct)
from liouville_lab.nonlinearity import QuadraticSystem, ScalarPower, ScalarQuadratic, builtin_fields, check_identities
from liouville_lab.selfsimilar import (RescaledFrame, blowup_anchor, check_energy_nonnegative, rescaled_energy_run,
                                       stationary_trace, verify_GK2, y_grid)
from liouville_lab.stationary import scan, shoot
from liouville_lab.zeronumber import cone_K, zero_number_trace, zero_numbers

from oracles import (FLAT_T_P3_U5, SQRT_PI_OVER_8, all_sign_patterns, doubling_ok, exact_exponents, flat_profile,
                     hamiltonian_period_cubic, sign_changes, subcritical_pairs)


@pytest.fixture
def announce(capsys):
    def _announce(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return _announce


def _bump_trace(p, nx=800, amplitude=3.0):
    solver = HeatSolver(Line(16.0), ScalarPower(p=float(p)), config=SolverConfig(nx=nx))
    U0 = initial_data(solver.geometry, solver.x, 1, {"kind": "gaussian", "amplitude": amplitude, "width": 1.0})
    return solver.run_until(solver.state(U0))


# 1 -------------------------------------------------------------------------------------------

def test_criterion_1_algebraic_suite(announce):
    t0 = time.perf_counter()
    fields = builtin_fields()
    reports = [check_identities(f, samples=1000, tol=1e-10, fd_tol=1e-6) for f in fields]
    elapsed = time.perf_counter() - t0
    worst = max(max(r.euler, r.homogeneity) for r in reports)
    worst_fd = max(r.gradient for r in reports)
    ok = len(fields) == 5 and all(r.passed for r in reports) and elapsed < 5
    assert announce(1, ok, f"{len(fields)} fields, exact residual {worst:.1e}, FD residual {worst_fd:.1e}, "
                           f"{elapsed:.2f}s")


# 2 -------------------------------------------------------------------------------------------

def test_criterion_2_flat_blowup(announce):
    t0 = time.perf_counter()
    nx = 32
    solver = HeatSolver(Line(1.0, "neumann", "neumann"), ScalarPower(p=3.0), config=SolverConfig(nx=nx, safety=0.05))
    trace = solver.run_until(solver.state(np.full((1, nx + 1), 5.0)))
    fit = fit_blowup_rate(trace)
    elapsed = time.perf_counter() - t0
    T_err = abs(fit.T_est / FLAT_T_P3_U5 - 1)
    keep = trace.sup <= 1e3
    prof_err = float(np.max(np.abs(trace.sup[keep] / flat_profile(trace.t[keep], 3.0, FLAT_T_P3_U5) - 1)))
    ok = T_err < 0.01 and prof_err < 1e-3 and trace.sup[keep].max() > 900 and elapsed < 10
    assert announce(2, ok, f"T = {fit.T_est:.6g} (rel err {T_err:.1e}), profile rel err {prof_err:.1e} "
                           f"up to sup {trace.sup[keep].max():.3g}, {elapsed:.2f}s")


# 3 -------------------------------------------------------------------------------------------

def test_criterion_3_blowup_rate(announce):
    results = {}
    for p, target, tol in ((3, 0.5, 0.05), (2, 1.0, 0.1)):
        t0 = time.perf_counter()
        fit = fit_blowup_rate(_bump_trace(p))
        results[p] = (fit.beta_fit, abs(fit.beta_fit - target) <= tol, time.perf_counter() - t0)
    ok = all(good and dt < 60 for _, good, dt in results.values())
    detail = ", ".join(f"p={p}: beta = {b:.4f} ({dt:.2f}s)" for p, (b, _, dt) in results.items())
    assert announce(3, ok, detail)


# 4 -------------------------------------------------------------------------------------------

def _energy_run(nx, ds, safety):
    solver = HeatSolver(Line(16.0), ScalarPower(p=3.0), config=SolverConfig(nx=nx, safety=safety))
    U0 = initial_data(solver.geometry, solver.x, 1, {"kind": "gaussian", "amplitude": 3.0, "width": 1.0})
    k, a = blowup_anchor(solver, U0)
    return rescaled_energy_run(solver, U0, RescaledFrame(k, 0.5, a), 2.5, ds, y=y_grid(12.0, 0.02))


def test_criterion_4_rescaled_energy(announce):
    const = stationary_trace(2 ** -0.5, ScalarPower(p=3.0), 0.5, np.linspace(0.0, 1.0, 5), n=1)
    err_a = float(np.max(np.abs(const.E - SQRT_PI_OVER_8)))
    coarse, fine = _energy_run(1600, 0.05, 0.1), _energy_run(3200, 0.025, 0.05)
    gk_c, gk_f = verify_GK2(coarse, 1e-6), verify_GK2(fine, 1e-6)
    ratio = gk_c.max_residual / gk_f.max_residual
    ok_a = err_a <= 1e-6
    ok_b = gk_c.violations == 0 and gk_f.violations == 0 and ratio >= 2
    ok_c = check_energy_nonnegative(coarse) and check_energy_nonnegative(fine)
    assert announce(4, ok_a and ok_b and ok_c,
                    f"(a) |E - sqrt(pi)/8| = {err_a:.1e}; (b) E' + D residual {gk_c.max_residual:.2e} -> "
                    f"{gk_f.max_residual:.2e} (x{ratio:.2f}), increases {gk_c.violations}/{gk_f.violations}; "
                    f"(c) min E = {min(coarse.E.min(), fine.E.min()):.4f}")


# 5 -------------------------------------------------------------------------------------------

def test_criterion_5_zero_number(announce):
    mismatches = 0
    for length in range(13):
        pats = all_sign_patterns(length).astype(float)
        got = zero_numbers(pats)
        ref = np.array([sign_changes(r) for r in pats]) if length <= 8 else _vector_sign_changes(pats)
        mismatches += int(np.count_nonzero(got != ref))
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        m = int(rng.integers(13, 200))
        v = rng.standard_normal(m) * (rng.random(m) < 0.8)
        mismatches += int(zero_numbers(v[None, :])[0] != sign_changes(v))

    cone = cone_K(4, 4, 4, 4)
    good = 0
    for seed in range(50):
        solver = HeatSolver(Line(10.0), _coupled(), config=SolverConfig(nx=400))
        U0 = initial_data(solver.geometry, solver.x, 2, {"kind": "random-in-cone", "amplitude": 1.0, "modes": 6,
                                                         "cone": {"preset": "K", "caps": [4, 4, 4, 4]},
                                                         "seed": seed})
        trace = solver.run_until(solver.state(U0), t_stop=1.0, save_every=10)
        z = zero_number_trace(trace, cone)
        good += all(np.all(np.diff(v) <= 0) for v in z.values())
    ok = mismatches == 0 and good >= 48
    assert announce(5, ok, f"{mismatches} mismatches (exhaustive <= 12 and 1e4 random); "
                           f"nonincreasing on {good}/50 nodal runs")


def _vector_sign_changes(pats):
    # row-wise restatement of `sign_changes` (drop zeros, compare neighbours), for the big exhaustive lengths
    out = np.zeros(pats.shape[0], int)
    last = np.zeros(pats.shape[0])
    for col in pats.T:
        nz = col != 0
        out += (nz & (last != 0) & (col != last)).astype(int)
        last = np.where(nz, col, last)
    return out


def _coupled():
    from liouville_lab.nonlinearity import GradientCoupled
    return GradientCoupled(q=0.0, beta=1.0)


# 6 -------------------------------------------------------------------------------------------

def test_criterion_6_shooting(announce):
    t0 = time.perf_counter()
    fld = ScalarPower(p=3.0)
    prof = shoot(fld, 1, [1.0], r_max=5 * hamiltonian_period_cubic(1.0))
    drift = float(np.max(np.abs(prof.hamiltonian(fld) - 0.25)))
    table = scan(fld, 3, [[x] for x in np.linspace(0.1, 10.0, 50)])
    bad = table.decaying_without_sign_change()
    worst = 0.0
    for xi in ((0.3, 0.2), (1.0, -0.4), (0.5, 0.5), (-0.2, 0.1)):
        for n in (1, 2, 3):
            a = shoot(QuadraticSystem(1.0), n, xi, r_max=20.0)
            b = shoot(ScalarQuadratic(), n, [sum(xi)], r_max=20.0)
            m = min(a.r.size, b.r.size)
            diff = np.abs(a.U[0, :m] + a.U[1, :m] - b.U[0, :m]) / max(1.0, np.max(np.abs(b.U[0, :m])))
            worst = max(worst, float(diff.max()))
    elapsed = time.perf_counter() - t0
    ok = drift <= 1e-8 and bad == 0 and len(table.rows) == 50 and worst <= 1e-8 and elapsed < 120
    assert announce(6, ok, f"Hamiltonian drift {drift:.1e}; {bad} decaying one-signed profiles in 50; "
                           f"sum reduction {worst:.1e}; {elapsed:.1f}s")


# 7 -------------------------------------------------------------------------------------------

def _random_time_instance(rng):
    X, L = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    sigma = float(rng.uniform(-3, 3))
    k = float(rng.uniform(1.0, 50.0))
    alphas = rng.uniform(0.0, 1.5, L)
    gamma, eps = float(rng.uniform(0, 2)), float(rng.uniform(0, 0.1))
    fns = []
    for _ in range(X):
        a, b, c, d = rng.uniform(0, 2), rng.uniform(0, 3), rng.uniform(0, 20), rng.uniform(0, 2 * np.pi)
        e, m, w = rng.uniform(0, 5), rng.uniform(sigma, sigma + 1), rng.uniform(0.05, 0.3)
        fns.append(lambda t, a=a, b=b, c=c, d=d, e=e, m=m, w=w:
                   a + b * np.sin(c * t + d) ** 2 + e * np.exp(-((t - m) / w) ** 2))
    s = sigma + np.linspace(0, 1, 20001)
    Imax = max(float(np.trapezoid(g(s), s)) for g in fns)
    widths = 0.5 * k ** (-alphas)
    # Markov: measure{window integral > b_l} <= w_l I / b_l, so this C1 leaves at most 1/4 bad
    C1 = float(np.max(4 * X * L * widths * Imax / k ** (gamma - alphas + eps))) * rng.uniform(1.0, 2.0)
    return fns, alphas, gamma, eps, C1, k, sigma


def _random_doubling_instance(rng):
    m, d = int(rng.integers(2, 300)), int(rng.integers(1, 4))
    pts = rng.uniform(-5, 5, (m, d))
    vals = rng.lognormal(0, 1.5, m) * (rng.random(m) < 0.9)
    x0 = int(rng.choice(np.flatnonzero(vals > 0))) if np.any(vals > 0) else 0
    vals[x0] = max(vals[x0], 1e-3)
    return pts, vals, x0, float(rng.uniform(0.1, 30.0))


def test_criterion_7_machinery(announce):
    t0 = time.perf_counter()
    sched = bootstrap_schedule(3, 3)
    strict = [v["slack"] for v in sched.certificate()["slacks"].values() if v["kind"] == "strict"]
    ok_sched = sched.L == 4 and verify_schedule(sched) and min(strict) > 0

    pairs = subcritical_pairs()
    ladders = [ladder(n, p) for n, p in pairs]
    # gamma_1 < mu is decided exactly: the float mu can round onto gamma_1 (n = 1, p = 4)
    ok_ladder = all(lad.terminated and Fraction(lad.gammas[0]) < exact_exponents(n, p)[1] and lad.verify()
                    for (n, p), lad in zip(pairs, ladders))

    rng = np.random.default_rng(7)
    time_fail = 0
    for _ in range(1000):
        fns, alphas, gamma, eps, C1, k, sigma = _random_time_instance(rng)
        try:
            sel = time_select(fns, alphas, gamma, eps, C1, k, sigma=sigma)
        except NoAdmissibleTime:
            time_fail += 1
            continue
        direct = window_integrals_direct(fns, sel.s_star, alphas, k)
        inside = sigma + 0.5 <= sel.s_star <= sigma + 1.0
        time_fail += not (inside and np.all(direct <= sel.bounds[None, :] * (1 + 1e-6)))
    dbl_fail = 0
    for _ in range(1000):
        pts, vals, x0, k = _random_doubling_instance(rng)
        res = doubling_select(DiscreteField(pts, vals), x0, k)
        dbl_fail += not doubling_ok(pts, vals, x0, k, res.index)
    elapsed = time.perf_counter() - t0
    ok = ok_sched and ok_ladder and time_fail == 0 and dbl_fail == 0 and elapsed < 60
    Ms = [lad.M for lad in ladders]
    assert announce(7, ok, f"schedule(3,3) L={sched.L}, min strict slack {min(strict):.2e}; "
                           f"{len(ladders)} ladders verified (M {min(Ms)}..{max(Ms)}); "
                           f"time_select failures {time_fail}/1000, doubling failures {dbl_fail}/1000; "
                           f"{elapsed:.1f}s")


# 8 -------------------------------------------------------------------------------------------

CAMPAIGN = {
    "id": "acceptance-nodal-p3",
    "nonlinearity": {"kind": "gradient-coupled", "q": 0, "beta": 1},
    "geometry": {"kind": "line", "size": 10, "left": "neumann", "right": "neumann"},
    "perturbation": {"lam": 0, "gamma": 0},
    "solver": {"nx": 400},
    "cone": {"preset": "K", "caps": [4, 4, 4, 4]},
    "initial_data": {"kind": "random-in-cone", "amplitude": 1.0, "modes": 4,
                     "cone": {"preset": "K", "caps": [4, 4, 4, 4]}},
    "runs": 20,
    "seed": 7,
    "t_stop": 5.0,
    "save_every": 10,
}


def test_criterion_8_envelope_campaign(announce, tmp_path):
    t0 = time.perf_counter()
    base = run_campaign(CAMPAIGN, out_dir=tmp_path / "x1")
    big = run_campaign(scaled(CAMPAIGN, 10.0), out_dir=tmp_path / "x10")
    elapsed = time.perf_counter() - t0
    finite = all(math.isfinite(v) for v in (base.C_tilde, base.C, big.C_tilde, big.C))
    ratio = max(base.C, big.C) / min(base.C, big.C)
    used = len(base.runs)
    ok = finite and base.violations == 0 and big.violations == 0 and ratio < 2 and used == 20 and elapsed < 600
    assert announce(8, ok, f"C_tilde = {base.C_tilde:.4g}, C = {base.C:.6g} (x10: {big.C:.6g}, ratio {ratio:.3f}), "
                           f"violations {base.violations}/{big.violations}, {used} runs, {elapsed:.1f}s")
