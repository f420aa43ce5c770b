import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_lab.nonlinearity import (Custom, GradientCoupled, QuadraticSystem, ScalarPower, ScalarQuadratic,
                                        builtin_fields, check_identities, eval_F, eval_G, finite_difference_gradient,
                                        from_config, vector_power)


def test_scalar_power_values():
    f = ScalarPower(p=3.0)
    assert eval_F(f, [2.0]) == pytest.approx([8.0])
    assert eval_G(f, [2.0]) == pytest.approx(4.0)
    assert eval_F(f, [-2.0]) == pytest.approx([-8.0])


def test_scalar_quadratic_values():
    assert eval_G(ScalarQuadratic(), [3.0]) == pytest.approx(9.0)
    assert eval_F(ScalarQuadratic(), [-3.0]) == pytest.approx([9.0])


def test_quadratic_system_values():
    f = QuadraticSystem(1.0)
    assert f.N == 2 and f.p == 2.0
    assert eval_F(f, [1.0, 2.0]) == pytest.approx([4.0, 5.0])
    assert eval_G(f, [1.0, 2.0]) == pytest.approx(14.0 / 3.0)


def test_gradient_coupled_values():
    f = GradientCoupled(q=0.0, beta=1.0)
    assert f.p == 3.0
    U = np.array([1.0, 1.0])
    F, G = eval_F(f, U), eval_G(f, U)
    assert F == pytest.approx([2.0, 2.0])
    assert G == pytest.approx(1.0)
    assert float(F @ U) == pytest.approx((f.p + 1) * G)


@pytest.mark.parametrize("field", builtin_fields(), ids=lambda f: f.name)
def test_zero_maps_to_zero(field):
    Z = np.zeros(field.N)
    assert eval_G(field, Z) == 0.0
    assert np.all(eval_F(field, Z) == 0.0)


@pytest.mark.parametrize("field", builtin_fields(), ids=lambda f: f.name)
def test_builtin_identities(field):
    rep = check_identities(field, samples=1000)
    assert rep.passed, rep.as_dict()
    assert rep.euler <= 1e-10 and rep.homogeneity <= 1e-10 and rep.gradient <= 1e-6


def test_five_builtins():
    names = [f.name for f in builtin_fields()]
    assert len(names) == 5
    assert {"scalar-power", "scalar-quadratic", "gradient-coupled", "quadratic-system"} <= set(names)


def test_gradient_coupled_attractive_and_fractional():
    rep = check_identities(GradientCoupled(q=0.5, beta=-0.5), samples=1000, fd_tol=1e-6)
    assert rep.passed


def test_broken_custom_field_fails_euler():
    # G is off by a factor 2: a negative control that must be caught
    bad = Custom(1, 3.0, G_fn=lambda U: U[0] ** 4 / 2.0, F_fn=lambda U: U ** 3)
    rep = check_identities(bad, samples=200)
    assert not rep.passed
    assert rep.euler > 1e-3


def test_vector_power_custom_passes():
    assert check_identities(vector_power(3, 2.5), samples=300).passed


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_F(QuadraticSystem(1.0), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        eval_G(ScalarPower(p=3.0), [1.0, 2.0])


def test_invalid_parameters():
    with pytest.raises(ValueError):
        ScalarPower(p=1.0)
    with pytest.raises(ValueError):
        GradientCoupled(q=-1.5)
    with pytest.raises(ValueError):
        check_identities(ScalarPower(p=3.0), tol=0.0)


def test_from_config_roundtrip():
    for f in builtin_fields()[:4]:
        g = from_config(f.to_config())
        assert type(g) is type(f) and g.p == f.p and g.N == f.N
    with pytest.raises(ValueError):
        from_config({"kind": "cubic-quintic"})


def test_vectorised_evaluation_shape():
    f = GradientCoupled(q=0.0, beta=2.0)
    U = np.random.default_rng(0).uniform(-2, 2, (2, 7))
    assert eval_F(f, U).shape == (2, 7)
    assert np.shape(eval_G(f, U)) == (7,)


@settings(max_examples=200, deadline=None)
@given(st.floats(1.1, 6.0), st.floats(-3, 3), st.floats(0.1, 10.0))
def test_scalar_power_homogeneity_property(p, u, lam):
    f = ScalarPower(p=p)
    lhs = eval_F(f, [lam * u])[0]
    rhs = lam ** p * eval_F(f, [u])[0]
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1.0, 1.0, exclude_min=True), st.floats(-2, 2))
def test_gradient_coupled_fd_property(u, v, q, beta):
    f = GradientCoupled(q=q, beta=beta)
    U = np.array([u, v])
    if np.min(np.abs(U)) < 1e-2:
        return  # |u v|^{q+2} is only C^1 across the coordinate axes
    fd = finite_difference_gradient(f, U)
    F = eval_F(f, U)
    assert np.max(np.abs(fd - F)) <= 1e-6 * (1 + np.max(np.abs(F)))
