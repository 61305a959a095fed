import numpy as np
import pytest

from tiltlab.admissible import parse_admissible
from tiltlab.regularity import (check_metric_regularity, check_monotone,
                                check_selection_property_4_4, check_strong_metric_regularity,
                                interval_excess, single_valuedness_radius)
from tiltlab.subdiff import SetValuedGraph, graph_from_points, subdifferential_graph

LINEAR = parse_admissible("power:1")
LINE_2X = graph_from_points([-2.0, 2.0], [-4.0, 4.0])
# F(0) = {0, 2}, F(t) = {|t|}: monotone fails but the selection property holds
JUMP = SetValuedGraph([[-1, 1, 0, 0], [0, 0, 1, 1], [0, 2, 0, 2]])


def test_line_is_metrically_regular_at_unit_constants():
    cert = check_metric_regularity(LINE_2X, (0.0, 0.0), LINEAR, 1.0, 1.0, 1.0)
    assert cert.passed


def test_line_fails_when_tau_is_too_large():
    cert = check_metric_regularity(LINE_2X, (0.0, 0.0), LINEAR, 3.0, 1.0, 1.0)
    assert not cert.passed
    w = cert.witness
    assert w is not None and w["y"] != pytest.approx(2 * w["x"])


def test_empty_image_is_a_vacuous_sample():
    short = graph_from_points([-0.5, 0.5], [-1.0, 1.0])
    assert check_metric_regularity(short, (0.0, 0.0), LINEAR, 1.0, 1.0, 1.0).passed


def test_line_is_strongly_regular_for_any_delta_covering_the_preimages():
    # y in B(0, 1) has preimage y / 2, so every delta above 1/2 sees exactly one point
    for delta in (0.6, 1.0, 5.0):
        cert = check_strong_metric_regularity(LINE_2X, (0.0, 0.0), LINEAR, 1.0, 1.0, 1.0, delta)
        assert cert.passed


def test_parabola_preimage_is_not_a_singleton():
    x = np.linspace(-2, 2, 401)
    g = graph_from_points(x, x ** 2)
    cert = check_strong_metric_regularity(g, (0.0, 0.0), LINEAR, 1.0, 1.0, 1.5, 3.0)
    assert not cert.passed
    # F^-1(1) = {-1, 1} already gives diameter 2
    assert cert.sweep["singleton_margin"] < -1.9


def test_empty_preimage_fails_the_singleton_clause():
    half = graph_from_points([0.0, 1.0], [0.0, 2.0])
    cert = check_strong_metric_regularity(half, (0.0, 0.0), LINEAR, 1.0, 1.0, 0.5, 0.5)
    assert not cert.passed and cert.sweep["singleton_margin"] == -np.inf


def test_small_delta_on_line_leaves_some_preimages_empty():
    cert = check_strong_metric_regularity(LINE_2X, (0.0, 0.0), LINEAR, 1.0, 1.0, 1.0, 0.1)
    assert not cert.passed and cert.witness["clause"] == "singleton"


def test_monotone_examples():
    assert check_monotone(subdifferential_graph("quad", (-1, 1), 101)).passed
    cert = check_monotone(JUMP)
    assert not cert.passed and cert.witness["product"] < 0
    assert check_monotone(SetValuedGraph([[0.3, 0.1, 0.3, 0.1]])).passed


def test_selection_property_holds_for_the_jump_graph():
    assert check_selection_property_4_4(JUMP, (0.0, 0.0), LINEAR, 1.0, 1.0).passed


def test_selection_property_on_line():
    ok = check_selection_property_4_4(LINE_2X, (0.0, 0.0), parse_admissible("scaled-power:2,1"),
                                      1.0, 1.0)
    assert ok.passed and ok.margin == pytest.approx(0.0, abs=1e-9)
    assert not check_selection_property_4_4(LINE_2X, (0.0, 0.0), LINEAR, 1.0, 1.0).passed


@pytest.mark.parametrize("omega,gamma,delta,expected", [
    ("scaled-power:2,1", 1.0, 1.0, 0.5),
    ("power:2", 4.0, 1.0, 1.0),
    ("power:1", 0.0, 1.0, 0.0),
    ("power:2", 1.0, 5.0, 1.0),
])
def test_single_valuedness_radius(omega, gamma, delta, expected):
    got = single_valuedness_radius(parse_admissible(omega), gamma, delta)
    assert got == pytest.approx(expected, abs=1e-12)


def test_interval_excess():
    a = np.array([[0.0, 1.0]])
    assert interval_excess(a, np.array([[0.0, 0.5]])) == pytest.approx(0.5)
    assert interval_excess(a, np.array([[-1.0, 0.2], [0.8, 2.0]])) == pytest.approx(0.3)
    assert interval_excess(np.zeros((0, 2)), a) == 0.0
    assert interval_excess(a, np.zeros((0, 2))) == np.inf
