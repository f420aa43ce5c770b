import math

import numpy as np
import pytest
from scipy.integrate import quad

from liouville_lab.dynamics import HeatSolver, Line, RadialBall, SolutionState, SolverConfig, initial_data
from liouville_lab.nonlinearity import GradientCoupled, ScalarPower
from liouville_lab.selfsimilar import (EnergyTrace, OutOfDomain, RescaledFrame, TruncationTooSmall, blowup_anchor,
                                       check_energy_nonnegative, energy_chain, from_selfsimilar, growth_bound_C0,
                                       monotonicity_defect, rescaled_energy_run, stationary_trace, tail_mass,
                                       to_selfsimilar, verify_GK1, verify_GK2, weighted_energy, y_grid)

from oracles import SQRT_PI_OVER_8, flat_profile

KAPPA = 2 ** -0.5


def _state(fields, t, geom, nx):
    x = geom.grid(nx)
    return SolutionState(t=t, fields=np.atleast_2d(fields(x)), x=x)


def test_frame_maps():
    fr = RescaledFrame(k=0.5, beta=0.5, a=1.0)
    t = np.array([0.0, 0.1, 0.4, 0.49])
    s = fr.s(t)
    assert np.all(np.diff(s) > 0)
    assert fr.t(s) == pytest.approx(t)
    assert fr.s_anchor == pytest.approx(-math.log(0.5))
    with pytest.raises(OutOfDomain):
        fr.s(0.5)


def test_zero_state_rescales_to_zero():
    g = Line(40.0)
    st = _state(lambda x: 0 * x, 0.1, g, 400)
    rf = to_selfsimilar(st, g, RescaledFrame(1.0, 0.5, 20.0))
    assert np.all(rf.W == 0)
    assert weighted_energy(rf, ScalarPower(p=3.0), 0.5).E == 0.0


def test_exact_flat_solution_is_kappa():
    g = Line(60.0, "neumann", "neumann")
    k = 0.3
    for t in (0.0, 0.2, 0.29):
        st = _state(lambda x: np.full_like(x, float(flat_profile(t, 3.0, k))), t, g, 600)
        rf = to_selfsimilar(st, g, RescaledFrame(k, 0.5, 30.0))
        assert np.max(np.abs(rf.W - KAPPA)) < 1e-12
        assert np.max(np.abs(rf.dW)) < 1e-9


def test_affine_roundtrip():
    g = Line(20.0)
    st = _state(lambda x: np.exp(-((x - 10.0) ** 2)), 0.0, g, 2000)
    fr = RescaledFrame(1.0, 0.5, 10.0)
    rf = to_selfsimilar(st, g, fr, y=y_grid(8.0, 0.005))
    back = from_selfsimilar(rf, fr, st.x)
    inside = np.isfinite(back[0])
    assert inside.sum() > 100
    assert np.max(np.abs(back[0, inside] - st.fields[0, inside])) < 1e-4


def test_window_outside_domain():
    g = Line(4.0)
    st = _state(lambda x: 0 * x, 0.0, g, 40)
    with pytest.raises(OutOfDomain):
        to_selfsimilar(st, g, RescaledFrame(1.0, 0.5, 2.0))
    with pytest.raises(OutOfDomain):
        to_selfsimilar(st, g, RescaledFrame(-1.0, 0.5, 2.0), y=y_grid(1.0))
    with pytest.raises(OutOfDomain):
        to_selfsimilar(_state(lambda x: 0 * x, 0.0, RadialBall(3, 40.0), 40), RadialBall(3, 40.0),
                       RescaledFrame(1.0, 0.5, 1.0))


def test_constant_energy_closed_form():
    y = y_grid(12.0)
    W = np.full((1, y.size), KAPPA)
    E = weighted_energy(W, ScalarPower(p=3.0), 0.5, y).E
    assert E == pytest.approx(SQRT_PI_OVER_8, abs=1e-10)
    # independent adaptive quadrature of the same integrand over the whole line
    ref = quad(lambda v: (0.25 * KAPPA ** 2 - KAPPA ** 4 / 4) * math.exp(-v * v / 4), -np.inf, np.inf)[0]
    assert E == pytest.approx(ref, abs=1e-10)


def test_constant_energy_radial():
    # n = 3: int_{R^3} rho = (4 pi)^{3/2}
    tr = stationary_trace(KAPPA, ScalarPower(p=3.0), 0.5, np.linspace(0, 1, 4), n=3)
    assert tr.E[0] == pytest.approx((0.25 * 0.5 - 0.25 / 4) * (4 * math.pi) ** 1.5, rel=1e-6)


def test_truncation_too_small():
    y = y_grid(2.0)
    with pytest.raises(TruncationTooSmall):
        weighted_energy(np.ones((1, y.size)), ScalarPower(p=3.0), 0.5, y)
    assert tail_mass(12.0, 1) < 1e-8


def test_stationary_trace_identities():
    tr = stationary_trace(KAPPA, ScalarPower(p=3.0), 0.5, np.linspace(0.0, 2.0, 11))
    gk2, gk1 = verify_GK2(tr), verify_GK1(tr)
    assert gk2.passed and gk2.max_residual < 1e-14
    assert gk1.max_residual < 1e-12
    assert np.all(tr.D == 0)
    assert check_energy_nonnegative(tr)


def test_zero_trace_identities():
    tr = stationary_trace(0.0, ScalarPower(p=3.0), 0.5, np.linspace(0.0, 1.0, 5))
    assert np.all(tr.E == 0) and verify_GK1(tr).max_residual == 0.0 and check_energy_nonnegative(tr)


def test_increasing_energy_is_reported():
    s = np.linspace(0, 1, 6)
    tr = EnergyTrace(s=s, E=s.copy(), D=np.zeros(6), mass=np.zeros(6), gradterm=np.zeros(6), p=3.0, beta=0.5)
    assert verify_GK2(tr).violations == 5 and not verify_GK2(tr).passed
    assert monotonicity_defect(tr) == pytest.approx(0.2)


def test_coupled_constant_energy_matches_quadrature():
    f = GradientCoupled(q=0.0, beta=1.0)
    y = y_grid(12.0)
    W = np.full((2, y.size), 0.3)
    dens = 0.5 * 0.5 * (2 * 0.09) - float(f.G(np.array([0.3, 0.3])))
    assert weighted_energy(W, f, 0.5, y).E == pytest.approx(dens * 2 * math.sqrt(math.pi), rel=1e-9)


@pytest.fixture(scope="module")
def blowup_runs():
    out = []
    for nx, ds, safety in ((1600, 0.05, 0.1), (3200, 0.025, 0.05)):
        solver = HeatSolver(Line(16.0), ScalarPower(p=3.0), config=SolverConfig(nx=nx, safety=safety))
        U0 = initial_data(solver.geometry, solver.x, 1, {"kind": "gaussian", "amplitude": 3.0, "width": 1.0})
        k, a = blowup_anchor(solver, U0)
        out.append(rescaled_energy_run(solver, U0, RescaledFrame(k, 0.5, a), 2.5, ds, y=y_grid(12.0, 0.02)))
    return out


def test_blowup_energy_monotone_and_positive(blowup_runs):
    for tr in blowup_runs:
        assert verify_GK2(tr).violations == 0
        assert check_energy_nonnegative(tr)
        assert monotonicity_defect(tr) == 0.0


def test_identity_residuals_shrink_under_refinement(blowup_runs):
    coarse, fine = blowup_runs
    assert verify_GK2(coarse).max_residual / verify_GK2(fine).max_residual >= 2
    assert verify_GK1(coarse).max_residual > verify_GK1(fine).max_residual


def test_energy_chain_on_blowup_run(blowup_runs):
    tr = blowup_runs[1]
    ch = energy_chain(tr, tr.s[0] + 1.2)
    assert ch.holds(1e-4)
    with pytest.raises(ValueError):
        energy_chain(tr, tr.s[0])


def test_growth_bound_reported():
    assert growth_bound_C0(2, 0.5) == pytest.approx(math.exp(3.0))


def test_rescaled_run_argument_checks():
    solver = HeatSolver(Line(16.0), ScalarPower(p=3.0), config=SolverConfig(nx=100))
    U0 = initial_data(solver.geometry, solver.x, 1, {"kind": "gaussian", "amplitude": 0.1})
    with pytest.raises(ValueError):
        rescaled_energy_run(solver, U0, RescaledFrame(1.0, 0.5, 8.0), 1.0, 2.0)

