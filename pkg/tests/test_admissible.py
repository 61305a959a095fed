import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltlab.admissible import (AdmissibleFunction, antiderivative_function, check_admissibility,
                                construct_catalog, derivative_function,
                                inverse_derivative_function, inverse_right_derivative,
                                parse_admissible, phi_alpha, right_derivative)

GRID = np.linspace(0.0, 10.0, 1001)


def custom(fn, convex=False):
    return AdmissibleFunction(name="custom", evaluate=fn, is_convex=convex)


def test_power_two_values_and_flags():
    phi = construct_catalog("power", [2])
    assert phi(3.0) == 9.0
    assert phi.is_convex and phi.is_strictly_convex and phi.is_differentiable


def test_power_one_is_not_strictly_convex():
    phi = construct_catalog("power", [1])
    assert phi(2.5) == 2.5
    assert phi.is_convex and not phi.is_strictly_convex


def test_capped_linear_is_admissible_but_not_convex():
    phi = construct_catalog("capped-linear", [1])
    assert phi(0.5) == 0.5 and phi(4.0) == 1.0
    assert not phi.is_convex
    assert check_admissibility(phi, GRID).passed


@pytest.mark.parametrize("family,params", [("bogus", [1]), ("power", [0]), ("power", [-1]),
                                           ("user-table", [0, 0, 1, 2, 2, 1])])
def test_bad_catalog_requests_raise(family, params):
    with pytest.raises(ValueError):
        construct_catalog(family, params)


def test_parse_matches_construct():
    assert parse_admissible("scaled-power:0.5,3")(2.0) == pytest.approx(4.0)


@pytest.mark.parametrize("phi,t,expected", [
    (construct_catalog("power", [2]), 1.0, 2.0),
    (construct_catalog("power", [1]), 0.0, 1.0),
])
def test_right_derivative_closed_form(phi, t, expected):
    assert right_derivative(phi, t) == pytest.approx(expected, abs=1e-12)


def test_right_derivative_at_a_kink_uses_the_right_side():
    hinge = custom(lambda t: np.maximum(t - 1.0, 0.0), convex=True)
    assert right_derivative(hinge, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert right_derivative(hinge, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_right_derivative_needs_convexity_without_closed_form():
    with pytest.raises(ValueError):
        right_derivative(custom(lambda t: np.sqrt(t)), 1.0)


@pytest.mark.parametrize("p,s,expected", [(2, 1.0, 0.5), (4, 4.0, 1.0), (2, 0.0, 0.0)])
def test_inverse_right_derivative(p, s, expected):
    assert inverse_right_derivative(construct_catalog("power", [p]), s) == pytest.approx(
        expected, abs=1e-12)


def test_inverse_right_derivative_by_bisection():
    quartic = AdmissibleFunction(name="t^4", evaluate=lambda t: t ** 4, is_convex=True,
                                 is_strictly_convex=True, is_differentiable=True,
                                 derivative=lambda t: 4 * t ** 3)
    assert inverse_right_derivative(quartic, 4.0) == pytest.approx(1.0, abs=1e-11)
    assert inverse_right_derivative(quartic, 32.0) == pytest.approx(2.0, abs=1e-11)


def test_inverse_right_derivative_rejects_negative_targets():
    with pytest.raises(ValueError):
        inverse_right_derivative(construct_catalog("power", [2]), -1.0)


def test_admissibility_rejects_zero_function():
    rep = check_admissibility(custom(lambda t: 0.0 * t), GRID)
    assert not rep.passed and not rep.separation


def test_admissibility_accepts_square():
    assert check_admissibility(construct_catalog("power", [2]), GRID).passed


@pytest.mark.parametrize("phi,alpha,t,expected", [
    (construct_catalog("power", [2]), 0.5, 1.0, 8.0),
    (construct_catalog("power", [2]), 0.3, 0.0, 0.0),
    (construct_catalog("power", [1]), 0.5, 3.0, 2.0),
])
def test_phi_alpha(phi, alpha, t, expected):
    assert phi_alpha(phi, alpha, t) == pytest.approx(expected)


def test_phi_alpha_rejects_alpha_outside_unit_interval():
    with pytest.raises(ValueError):
        phi_alpha(construct_catalog("power", [2]), 1.0, 1.0)


def test_derived_functions_of_square():
    phi = construct_catalog("power", [2])
    assert derivative_function(phi)(1.5) == pytest.approx(3.0)
    assert inverse_derivative_function(phi)(1.0) == pytest.approx(0.5)
    assert antiderivative_function(construct_catalog("power", [1]))(2.0) == pytest.approx(2.0)


def test_antiderivative_by_quadrature_matches_closed_form():
    table = construct_catalog("user-table", [0, 0, 1, 1, 2, 2])
    assert antiderivative_function(table)(2.0) == pytest.approx(2.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1.1, 6.0), s=st.floats(0.0, 50.0))
def test_inverse_derivative_inverts_the_derivative(p, s):
    phi = construct_catalog("power", [p])
    t = inverse_right_derivative(phi, s)
    assert right_derivative(phi, t) == pytest.approx(s, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.2, 6.0), a=st.floats(0.0, 20.0), b=st.floats(0.0, 20.0))
def test_power_is_monotone(p, a, b):
    phi = construct_catalog("power", [p])
    lo, hi = sorted((a, b))
    assert phi(lo) <= phi(hi)
