import numpy as np
import pytest

from tiltlab.admissible import parse_admissible
from tiltlab.gridfn import sample_function
from tiltlab.subdiff import (SetValuedGraph, check_condition_6_1, convex_subdifferential_1d,
                             eta_psi, graph_from_grid, graph_from_points, polyline_normal_cone,
                             second_subdifferential, subdifferential_graph)

ABS_GRAPH = SetValuedGraph([[-2, -1, 0, -1], [0, -1, 0, 1], [0, 1, 2, 1]])
LINE_2X = graph_from_points([-2.0, 2.0], [-4.0, 4.0])
IDENTITY = graph_from_points([-2.0, 2.0], [-2.0, 2.0])
LINEAR = parse_admissible("power:1")
SQUARE = parse_admissible("power:2")


@pytest.mark.parametrize("fid,x,expected,tol", [
    ("abs", 0.0, (-1.0, 1.0), 1e-12),
    ("quad", 1.0, (2.0, 2.0), 2 * 0.01),
    ("max-linear:1,2", 0.0, (1.0, 2.0), 1e-12),
])
def test_convex_subdifferential_1d(fid, x, expected, tol):
    a, b = convex_subdifferential_1d(sample_function(fid, (-2, 2), 401), x)
    assert a == pytest.approx(expected[0], abs=tol)
    assert b == pytest.approx(expected[1], abs=tol)
    assert a <= b


def test_convex_subdifferential_rejects_nonconvex_grids():
    with pytest.raises(ValueError):
        convex_subdifferential_1d(sample_function("double-well", (-2, 2), 41), 0.0)


def test_subdifferential_graph_of_abs():
    g = subdifferential_graph("abs", (-1, 1), 101)
    assert g.on_graph((-0.5, -1.0)) and g.on_graph((0.5, 1.0))
    assert g.on_graph((0.0, 0.3)) and g.on_graph((0.0, -1.0))
    assert not g.on_graph((0.5, 0.0))


def test_subdifferential_graph_of_square_is_a_line():
    g = subdifferential_graph("quad", (-1, 1), 101)
    for x in np.linspace(-1, 1, 17):
        assert g.on_graph((x, 2 * x))
    assert not g.on_graph((0.5, 0.0))


def test_subdifferential_graph_of_interval_indicator_is_the_normal_cone():
    g = subdifferential_graph("indicator-ball:0,1", (-2, 2), 101)
    assert g.on_graph((-1.0, -50.0)) and g.on_graph((1.0, 50.0))
    assert g.on_graph((0.3, 0.0))
    assert not g.on_graph((-1.0, 1.0)) and not g.on_graph((1.0, -1.0))


def test_graph_from_grid_staircase():
    g = graph_from_grid(sample_function("abs", (-1, 1), 5))
    assert g.on_graph((0.0, 0.0)) and g.on_graph((-0.75, -1.0))


def test_normal_cone_of_line():
    cone = polyline_normal_cone(LINE_2X, (1.0, 2.0))
    assert cone.contains((2.0, -1.0)) and cone.contains((-4.0, 2.0))
    assert not cone.contains((1.0, 2.0))


def test_normal_cone_at_vertical_interior_point():
    cone = polyline_normal_cone(ABS_GRAPH, (0.0, 0.5))
    assert cone.contains((1.0, 0.0)) and cone.contains((-3.0, 0.0))
    assert not cone.contains((0.0, 1.0))


def test_normal_cone_off_graph_raises():
    with pytest.raises(ValueError):
        polyline_normal_cone(ABS_GRAPH, (5.0, 5.0))


def test_second_subdifferential_examples():
    assert second_subdifferential(IDENTITY, 0.7, 0.7, 1.0).tolist() == [[1.0, 1.0]]
    assert second_subdifferential(ABS_GRAPH, 0.0, 0.5, 0.0).tolist() == [[-np.inf, np.inf]]
    assert second_subdifferential(ABS_GRAPH, 0.0, 0.5, 1.0).shape[0] == 0


def test_eta_psi_examples():
    assert eta_psi(IDENTITY, LINEAR, 0.3, 0.3, 0.2) == 1.0
    assert eta_psi(IDENTITY, SQUARE, 0.3, 0.3, 0.2) == pytest.approx(0.4)
    assert eta_psi(IDENTITY, SQUARE, 0.3, 0.3, -0.1) == pytest.approx(0.2)
    assert eta_psi(IDENTITY, SQUARE, 0.0, 0.0, 10.0) == np.inf


@pytest.mark.parametrize("kappa,passed", [(1.0, True), (2.0, False)])
def test_condition_6_1_on_identity(kappa, passed):
    cert = check_condition_6_1(IDENTITY, LINEAR, kappa, 1.0)
    assert cert.passed is passed
    if passed:
        assert cert.margin == pytest.approx(0.0, abs=1e-8)


def test_graph_csv_round_trip():
    text = ABS_GRAPH.to_csv()
    assert np.array_equal(SetValuedGraph.from_csv(text).segments, ABS_GRAPH.segments)


@pytest.mark.parametrize("segs", [[[np.nan, 0, 1, 1]], [[0, -np.inf, 1, np.inf]], []])
def test_bad_segments_raise(segs):
    with pytest.raises(ValueError):
        SetValuedGraph(segs)
