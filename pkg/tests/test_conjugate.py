import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltlab.conjugate import (SmoothnessModulus, check_conjugate_lower_bound, conjugate_at,
                               conjugate_transform, convex_envelope, fit_smoothness_modulus,
                               lower_bound_pairs)
from tiltlab.gridfn import GridFunction, sample_function


def brute_sup(f, u):
    fin = f.finite
    x = f.coords[fin, 0]
    return np.max(u[:, None] * x[None, :] - f.values[fin][None, :], axis=1)


def test_half_square_is_self_conjugate():
    f = sample_function("quad:0.5", (-2, 2), 401)
    g = conjugate_transform(f, (-2, 2), 401)
    u = g.axes[0]
    assert np.max(np.abs(g.values - u ** 2 / 2)) <= 1e-12


def test_indicator_conjugate_is_absolute_value():
    f = sample_function("indicator-ball:0,1", (-2, 2), 401)
    g = conjugate_transform(f, (-3, 3), 61)
    assert np.max(np.abs(g.values - np.abs(g.axes[0]))) <= 1e-12


def test_truncated_abs_conjugate():
    f = sample_function("abs", (-2, 2), 401)
    g = conjugate_transform(f, (-2, 2), 41)
    u = g.axes[0]
    expected = np.where(np.abs(u) <= 1, 0.0, 2 * (np.abs(u) - 1))
    assert np.max(np.abs(g.values - expected)) <= 1e-12


@pytest.mark.parametrize("fid", ["quad", "double-well", "one-sided", "concave-cap",
                                 "user-table:-1,2,0,0,1,1", "indicator-ball:0.5,0.7"])
def test_hull_scan_equals_brute_force_exactly(fid):
    f = sample_function(fid, (-2, 2), 257)
    hull = conjugate_transform(f, (-5, 5), 129, method="hull")
    brute = conjugate_transform(f, (-5, 5), 129, method="brute")
    assert np.array_equal(hull.values, brute.values)
    assert np.array_equal(hull.values, brute_sup(f, hull.axes[0]))


def test_two_dimensional_factorized_agrees_with_brute():
    f = sample_function("double-well", ((-2, 2), (-1, 1)), 21)
    a = conjugate_transform(f, ((-3, 3), (-2, 2)), 21, method="brute")
    b = conjugate_transform(f, ((-3, 3), (-2, 2)), 21, method="factorized")
    assert np.max(np.abs(a.values - b.values)) <= 1e-12


def test_conjugate_at_scattered_points():
    f = sample_function("quad", (-2, 2), 401)
    u = np.array([0.3, -1.1])
    assert np.array_equal(conjugate_at(f, u), brute_sup(f, u))


def test_envelope_of_convex_function_is_unchanged():
    f = sample_function("quad", (-2, 2), 201)
    assert np.max(np.abs(convex_envelope(f).values - f.values)) <= 1e-12


def test_envelope_of_double_well_fills_the_well():
    f = sample_function("double-well", (-2, 2), 201)
    env = convex_envelope(f).values
    x = f.axes[0]
    expected = np.where(np.abs(x) <= 1, 0.0, (x ** 2 - 1) ** 2)
    assert np.max(np.abs(env - expected)) <= 1e-9


def test_envelope_of_concave_cap_is_zero_on_its_domain():
    f = sample_function("concave-cap+indicator-ball:0,1", (-2, 2), 201)
    env = convex_envelope(f)
    inside = np.abs(f.axes[0]) <= 1
    assert np.max(np.abs(env.values[inside])) <= 1e-12
    assert np.all(np.isinf(env.values[~inside]))


@pytest.mark.parametrize("fid,region,c,p,tol_c,tol_p", [
    ("quad:0.5", (-1, 1), 1.0, 1.0, 0.05, 0.05),
    ("quartic", (-1, 1), 12.0, 1.0, 0.6, 0.05),
    ("power-q:1.3333333333333333,0.75", (-1, 1), None, 1 / 3, None, 0.05),
])
def test_fit_smoothness_modulus(fid, region, c, p, tol_c, tol_p):
    g = sample_function(fid, (-1.5, 1.5), 3001)
    mod = fit_smoothness_modulus(g, region)
    assert mod.exponent == pytest.approx(p, abs=tol_p)
    if c is not None:
        # compare the modulus at a small separation: p and C trade off in the fit
        assert mod(0.01) / 0.01 == pytest.approx(c, abs=tol_c)


def test_lower_bound_holds_for_quartic():
    g = sample_function("quartic", (-1.5, 1.5), 3001)
    mod = fit_smoothness_modulus(g, (-0.5, 0.5))
    pairs = lower_bound_pairs(g, mod, 0.0, 0.2, count=40)
    cert = check_conjugate_lower_bound(g, mod, pairs, 0.0, 0.2)
    assert cert.passed
    assert cert.sweep["raw_margin"] >= -1e-8 - cert.sweep["grid_term"]


def test_lower_bound_rejects_non_invertible_modulus():
    g = sample_function("quad", (-1, 1), 11)
    with pytest.raises(ValueError):
        check_conjugate_lower_bound(g, SmoothnessModulus("power", 1.0, 0.0, 0.0), [[0.0, 0.0]])


def test_lower_bound_rejects_far_samples():
    g = sample_function("quad", (-2, 2), 401)
    mod = SmoothnessModulus("power", 2.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        check_conjugate_lower_bound(g, mod, [[0.5, 0.0]], 0.0, 0.1)


@settings(max_examples=40, deadline=None)
@given(vals=st.lists(st.floats(-10, 10), min_size=5, max_size=5),
       u=st.floats(-20, 20))
def test_fenchel_young_on_random_tables(vals, u):
    f = GridFunction(((-1.0, 1.0),), 5, np.array(vals))
    star = conjugate_at(f, np.array([u]))[0]
    assert np.all(star >= u * f.coords[:, 0] - f.values - 1e-12)
    env = convex_envelope(f)
    assert np.all(env.values <= f.values + 1e-12)
