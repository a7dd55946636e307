"""Geometry oracles: exact surface measures, distances, corkscrew points.

Expected values here are derived independently of the implementation:
closed-form arc/cap formulas, brute-force quadrature, and Monte Carlo
cross-checks with fixed seeds.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coronalab.errors import (
    ConfigError,
    CorkscrewNotFound,
    OverlappingPieces,
    UnsupportedDimension,
)
from coronalab.geometry import (
    Domain,
    _Ball,
    _disk_rect_area,
    adr_report,
    corkscrew_point,
    make_domain,
    whsa_feasibility,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def circle():
    return make_domain({"shape": "ball", "d": 2, "radius": 1.0})


@pytest.fixture(scope="module")
def sphere():
    return make_domain({"shape": "ball", "d": 3, "radius": 1.0})


@pytest.fixture(scope="module")
def garnett3():
    return make_domain({"shape": "four_corner", "stages": 3})


# ---------------------------------------------------------------------------
# surface measure


def test_circle_total_length(circle):
    assert circle.sigma_total() == pytest.approx(TWO_PI, rel=1e-15)


def test_circle_cap_closed_form(circle):
    # arc of the unit circle inside B((1,0), r) has length 4*asin(r/2)
    for r in [0.1, 0.5, 1.0, 1.5]:
        expect = 4.0 * math.asin(r / 2.0)
        got = circle.surface_ball_measure(np.array([1.0, 0.0]), r)
        assert got == pytest.approx(expect, rel=1e-14)


def test_circle_cap_against_quadrature(circle):
    n = 200_000
    ang = (np.arange(n) + 0.5) * TWO_PI / n
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    x = np.array([math.cos(0.7), math.sin(0.7)])
    for r in [0.3, 0.9]:
        inside = np.linalg.norm(pts - x, axis=1) < r
        quad = inside.sum() * TWO_PI / n
        assert circle.surface_ball_measure(x, r) == pytest.approx(quad, abs=1e-3)


def test_sphere_cap_is_pi_r_squared(sphere):
    # cap of the unit sphere cut by B(x, r), x on the sphere, has area pi r^2
    x = np.array([0.0, 0.0, 1.0])
    for r in [0.2, 0.7, 1.3]:
        assert sphere.surface_ball_measure(x, r) == pytest.approx(math.pi * r * r, rel=1e-13)


def test_sphere_total_area(sphere):
    assert sphere.sigma_total() == pytest.approx(4.0 * math.pi, rel=1e-15)


def test_four_corner_total_length(garnett3):
    # stages 0..2 have 1, 4, 16 squares of sides 1, 1/4, 1/16: each stage
    # contributes perimeter 4, so three stages give 12
    assert garnett3.sigma_total() == pytest.approx(12.0, abs=0)


def test_four_corner_components(garnett3):
    assert garnett3.n_components == 21
    inside0 = garnett3.contains(np.array([[0.5, 0.5]]))
    assert bool(inside0[0])
    comp = garnett3.component_of(np.array([0.5, 0.5]))
    assert comp >= 0
    # a point in the gap between stage-1 squares is outside
    assert garnett3.component_of(np.array([2.5, 0.9])) == -1


def test_box_perimeter_and_area():
    d2 = make_domain({"shape": "box", "d": 2, "widths": [1.0, 0.7]})
    assert d2.sigma_total() == pytest.approx(2 * (1.0 + 0.7), rel=1e-15)
    d3 = make_domain({"shape": "box", "d": 3, "widths": [1.0, 2.0, 0.5]})
    expect = 2 * (1 * 2 + 2 * 0.5 + 1 * 0.5)
    assert d3.sigma_total() == pytest.approx(expect, rel=1e-15)


def test_half_space_plane_measures():
    hs2 = make_domain({"shape": "half_space", "d": 2})
    hs3 = make_domain({"shape": "half_space", "d": 3})
    x2, x3 = np.array([0.0, 0.0]), np.array([0.0, 0.0, 0.0])
    for r in [0.5, 1.0, 2.0]:
        assert hs2.surface_ball_measure(x2, r) == pytest.approx(2 * r, rel=1e-15)
        assert hs3.surface_ball_measure(x3, r) == pytest.approx(math.pi * r * r, rel=1e-15)


def test_slab_counts_both_planes():
    slab = make_domain({"shape": "half_space", "d": 2, "height": 1.0})
    # a ball of radius 1.5 centered on the bottom plane reaches the top plane
    x = np.array([0.0, 0.0])
    expect = 2 * 1.5 + 2 * math.sqrt(1.5 ** 2 - 1.0)
    assert slab.surface_ball_measure(x, 1.5) == pytest.approx(expect, rel=1e-13)


def test_disk_rect_area_against_monte_carlo():
    rng = np.random.default_rng(7)
    for r, rect in [(1.0, (-0.3, 0.8, -0.5, 0.6)), (0.7, (0.0, 1.0, -1.0, 0.2))]:
        n = 400_000
        xs = rng.uniform(rect[0], rect[1], n)
        ys = rng.uniform(rect[2], rect[3], n)
        frac = (xs * xs + ys * ys < r * r).mean()
        area = frac * (rect[1] - rect[0]) * (rect[3] - rect[2])
        assert _disk_rect_area(r, *rect) == pytest.approx(area, abs=5e-3)


# ---------------------------------------------------------------------------
# sampling


@pytest.mark.parametrize(
    "spec",
    [
        {"shape": "ball", "d": 2, "radius": 1.0},
        {"shape": "ball", "d": 3, "radius": 1.0},
        {"shape": "box", "d": 2, "widths": [1.0, 0.7]},
        {"shape": "four_corner", "stages": 3},
        {"shape": "cantor_complement", "stage": 2},
        {"shape": "half_space", "d": 2, "height": 1.0},
        {"shape": "lipschitz_graph", "knots_x": [-1, 0, 1], "knots_y": [0.0, 0.4, 0.0]},
    ],
)
def test_cloud_weights_sum_to_sigma(spec):
    dom = make_domain(spec)
    cloud = dom.sample_boundary(dom.diam_boundary() / 200.0)
    assert cloud.weights.sum() == pytest.approx(cloud.sigma_exact, rel=1e-12)
    assert cloud.sigma_exact == pytest.approx(dom.sigma_total(), rel=1e-12)
    assert "piece" in cloud.aux
    assert len(cloud) == len(cloud.weights) == len(cloud.component)


def test_circle_sample_count_is_power_of_two(circle):
    cloud = circle.sample_boundary(0.01)
    n = len(cloud)
    assert n & (n - 1) == 0 and TWO_PI / n <= 0.01


# ---------------------------------------------------------------------------
# distances


def test_nearest_boundary_consistency(garnett3):
    rng = np.random.default_rng(3)
    X = rng.uniform([-1.0, -1.0], [6.0, 2.0], size=(64, 2))
    P, dist = garnett3.nearest_boundary(X)
    assert np.allclose(np.linalg.norm(P - X, axis=1), dist, rtol=1e-12, atol=1e-12)
    assert np.max(garnett3.boundary_distance(P)) <= 1e-9


@given(
    st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
    st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
)
@settings(max_examples=60, deadline=None)
def test_signed_distance_lipschitz(a, b):
    dom = make_domain({"shape": "box", "d": 2, "widths": [1.0, 1.0]})
    x, y = np.array(a), np.array(b)
    sx = dom.signed_distance(x[None])[0]
    sy = dom.signed_distance(y[None])[0]
    assert abs(sx - sy) <= np.linalg.norm(x - y) + 1e-9


def test_rect_boundary_distance_circle(circle):
    # box far outside, box containing the circle, box crossing it
    assert circle.rect_boundary_distance(np.array([2.0, 2.0]), np.array([3.0, 3.0])) == (
        pytest.approx(math.sqrt(8.0) - 1.0, rel=1e-12)
    )
    assert circle.rect_boundary_distance(np.array([-0.1, -0.1]), np.array([0.1, 0.1])) == (
        pytest.approx(1.0 - math.sqrt(0.02), rel=1e-12)
    )
    assert circle.rect_boundary_distance(np.array([0.0, 0.0]), np.array([2.0, 2.0])) == 0.0


# ---------------------------------------------------------------------------
# regularity report


def test_adr_circle_ratio_window(circle):
    rep = adr_report(circle)
    # sigma(B(x,r)) / r on a unit circle is 4*asin(min(r,2)/2)/r: decreasing,
    # between 2 (small r) and 2.094 at the largest tested radius (diam/2)
    assert rep.dim == 2
    assert rep.min_ratio == pytest.approx(2.0, rel=1e-3)
    assert rep.max_ratio == pytest.approx(4.0 * math.asin(0.5), rel=1e-6)
    assert rep.adr_const < 8.0


def test_adr_plane_ratio_exactly_pi():
    hs3 = make_domain({"shape": "half_space", "d": 3})
    rep = adr_report(hs3)
    assert rep.min_ratio == pytest.approx(math.pi, rel=1e-12)
    assert rep.max_ratio == pytest.approx(math.pi, rel=1e-12)


def test_adr_four_corner_bounded(garnett3):
    rep = adr_report(garnett3)
    assert rep.adr_const < 8.0


# ---------------------------------------------------------------------------
# corkscrew points


def test_corkscrew_half_space_midpoint():
    hs = make_domain({"shape": "half_space", "d": 2})
    cs = corkscrew_point(hs, np.array([0.0, 0.0]), 1.0, c=0.5)
    # the only feasible point at c=1/2 is the midpoint of the vertical radius
    assert np.allclose(cs.point, [0.0, 0.5], atol=1e-9)
    assert cs.margin >= -1e-9


def test_corkscrew_disk_inward_radius(circle):
    cs = corkscrew_point(circle, np.array([1.0, 0.0]), 0.4, c=0.25)
    # best margin sits on the inward radius at depth r/2
    assert np.allclose(cs.point, [0.8, 0.0], atol=1e-9)
    d = circle.boundary_distance(cs.point[None])[0]
    assert d >= 0.25 * 0.4 - 1e-9


def test_corkscrew_infeasible_raises(circle):
    with pytest.raises(CorkscrewNotFound):
        corkscrew_point(circle, np.array([1.0, 0.0]), 0.4, c=0.95)


def test_corkscrew_respects_component(garnett3):
    # surface ball on the stage-0 square: the corkscrew must land inside
    cs = corkscrew_point(garnett3, np.array([0.5, 0.0]), 0.5, c=0.25)
    assert garnett3.contains(cs.point[None])[0]


# ---------------------------------------------------------------------------
# flatness certificates


def test_whsa_flat_boundary_feasible():
    hs = make_domain({"shape": "half_space", "d": 2})
    cloud = hs.sample_boundary(0.01)
    cert = whsa_feasibility(hs, np.array([0.0, 0.0]), 1.0, 0.1, cloud=cloud)
    assert cert.feasible
    assert cert.verify(hs, cloud)


def test_whsa_box_edge_feasible():
    box = make_domain({"shape": "box", "d": 2, "widths": [1.0, 1.0]})
    cert = whsa_feasibility(box, np.array([0.0, -0.5]), 0.3, 0.15)
    assert cert.feasible
    assert cert.clipped  # the big enclosing ball always exceeds the bbox here


def test_whsa_box_corner_infeasible():
    box = make_domain({"shape": "box", "d": 2, "widths": [1.0, 1.0]})
    cert = whsa_feasibility(box, np.array([-0.5, -0.5]), 1.0, 0.05)
    assert not cert.feasible
    # the least-violating plane still misses one of the closeness conditions
    bv = cert.best_violation
    assert bv is not None
    assert max(bv["a_margin"], bv["d_margin"], bv["c_margin"]) > 0


# ---------------------------------------------------------------------------
# validation errors


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        make_domain({"shape": "ball", "d": 4, "radius": 1.0})


def test_bad_spec_raises_config_error():
    with pytest.raises(ConfigError):
        make_domain({"no_shape": True})
    with pytest.raises(ConfigError):
        make_domain({"shape": "ball", "d": 2, "radius": -1.0})
    with pytest.raises(ConfigError):
        make_domain({"shape": "four_corner", "stages": 9})


def test_overlapping_pieces_rejected():
    a = _Ball([0.0, 0.0], 1.0, 2)
    b = _Ball([1.0, 0.0], 1.0, 2)
    with pytest.raises(OverlappingPieces):
        Domain([a, b])


def test_interior_point_is_inside(circle, garnett3):
    for dom in (circle, garnett3):
        for comp in range(min(dom.n_components, 5)):
            x = dom.interior_point(comp)
            assert dom.contains(x[None])[0]
            assert dom.component_of(x) == comp
