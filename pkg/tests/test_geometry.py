import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mc_intersection
from pcra.geometry import (
    discretization_gap,
    polygon_area,
    polygons_intersect,
    sector_to_polygon,
    sectors_overlap,
    segments_intersect,
)
from pcra.risk import PcraSector
from pcra.trajectory import Point


def sec(x, y, r, lo, hi):
    return PcraSector(Point(x, y), r, lo, hi)


class TestPolygon:
    def test_quarter_two_segments(self):
        poly = sector_to_polygon(sec(0, 0, 1, 0, 90), 2)
        h = math.sqrt(2) / 2
        np.testing.assert_allclose(poly, [(0, 0), (0, 1), (h, h), (1, 0)], atol=1e-15)

    def test_zero_radius(self):
        np.testing.assert_array_equal(sector_to_polygon(sec(2, 3, 0, 0, 90)), [(2, 3)])

    def test_zero_width_ray(self):
        np.testing.assert_allclose(sector_to_polygon(sec(0, 0, 2, 180, 180)), [(0, 0), (0, -2)], atol=1e-15)

    def test_full_circle_area_converges(self):
        s = sec(1, 1, 2.0, 0, 360)
        errs = [abs(polygon_area(sector_to_polygon(s, k)) - math.pi * 4) for k in (8, 32, 128, 512)]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-3

    @pytest.mark.parametrize("width", [10.0, 90.0, 200.0, 359.0])
    def test_gap_is_missing_area(self, width):
        s = sec(0, 0, 3.0, 20.0, 20.0 + width)
        exact = 0.5 * 9.0 * math.radians(width)
        assert exact - polygon_area(sector_to_polygon(s, 32)) == pytest.approx(discretization_gap(s, 32), rel=1e-9)

    def test_ninety_degree_error_bound(self):
        s = sec(0, 0, 1.0, 0, 90)
        assert discretization_gap(s, 32) / (math.pi / 4) < 0.005

    def test_too_few_segments(self):
        with pytest.raises(ValueError):
            sector_to_polygon(sec(0, 0, 1, 0, 90), 1)


class TestSegments:
    def test_crossing(self):
        a0, a1 = np.array([[0.0, 0.0]]), np.array([[2.0, 2.0]])
        b0, b1 = np.array([[0.0, 2.0], [3.0, 3.0]]), np.array([[2.0, 0.0], [4.0, 4.0]])
        np.testing.assert_array_equal(segments_intersect(a0, a1, b0, b1), [[True, False]])

    def test_touching_endpoint(self):
        assert segments_intersect(np.array([[0.0, 0]]), np.array([[1.0, 0]]), np.array([[1.0, 0]]), np.array([[1.0, 5]]))[0, 0]

    def test_collinear_overlap(self):
        assert segments_intersect(np.array([[0.0, 0]]), np.array([[2.0, 0]]), np.array([[1.0, 0]]), np.array([[3.0, 0]]))[0, 0]

    def test_point_in_polygon_cases(self):
        square = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
        assert polygons_intersect(np.array([[0.5, 0.5]]), square)
        assert not polygons_intersect(np.array([[1.5, 0.5]]), square)
        assert polygons_intersect(np.array([[1.0, 0.5]]), square)
        assert polygons_intersect(np.array([[0.2, 0.2], [0.4, 0.4]]), square)


class TestOverlap:
    def test_identical(self):
        s = sec(0, 0, 1, 10, 40)
        assert sectors_overlap(s, s)

    def test_far_apart(self):
        assert not sectors_overlap(sec(0, 0, 1, 0, 360), sec(100, 0, 1, 0, 360))

    def test_facing_sectors_meet(self):
        assert sectors_overlap(sec(0, 0, 3, 80, 100), sec(5, 0, 3, 260, 280))

    def test_back_to_back_miss(self):
        assert not sectors_overlap(sec(0, 0, 3, 260, 280), sec(5, 0, 3, 80, 100))

    def test_ray_through_sector(self):
        assert sectors_overlap(sec(-5, 0.5, 10, 90, 90), sec(0, 0, 2, 0, 180))

    def test_point_sector_inside(self):
        assert sectors_overlap(sec(0.5, 0.5, 0, 0, 0), sec(0, 0, 2, 0, 90))
        assert not sectors_overlap(sec(-0.5, 0.5, 0, 0, 0), sec(0, 0, 2, 0, 90))

    def test_containment(self):
        assert sectors_overlap(sec(0, 0, 10, 0, 360), sec(1, 1, 0.5, 30, 60))


@st.composite
def sectors(draw):
    lo = draw(st.floats(0, 360))
    return sec(
        draw(st.floats(-10, 10)),
        draw(st.floats(-10, 10)),
        draw(st.floats(0.0, 8.0)),
        lo,
        lo + draw(st.floats(0, 360)),
    )


@settings(max_examples=300, deadline=None)
@given(sectors(), sectors())
def test_symmetric(a, b):
    assert sectors_overlap(a, b) == sectors_overlap(b, a)


@settings(max_examples=200, deadline=None)
@given(sectors())
def test_reflexive(a):
    assert sectors_overlap(a, a)


@settings(max_examples=300, deadline=None)
@given(sectors(), sectors(), st.floats(1.0, 3.0))
def test_monotone_in_radius(a, b, k):
    # the inscribed polygon of a longer sector contains the shorter one's
    if sectors_overlap(a, b):
        assert sectors_overlap(sec(a.apex.x, a.apex.y, a.radius * k, a.theta_lo, a.theta_hi), b)


@settings(max_examples=300, deadline=None)
@given(sectors(), sectors(), st.floats(0.0, 60.0), st.floats(0.0, 60.0))
def test_monotone_in_angle_near_apex(a, b, dlo, dhi):
    """Widening keeps an overlap whose witness lies inside every chord.

    Vertices move along the arc when the sector widens, so the polygon only
    grows within radius ``r * cos(phi / 2)`` of the apex (``phi`` the new
    per-segment angle). A sector is shrunk to that radius before testing.
    """
    wide = sec(a.apex.x, a.apex.y, a.radius, a.theta_lo - dlo, a.theta_hi + dhi)
    phi = math.radians(wide.width) / 32
    inner = sec(a.apex.x, a.apex.y, a.radius * math.cos(phi / 2), a.theta_lo, a.theta_hi)
    if sectors_overlap(inner, b):
        assert sectors_overlap(wide, b)


def random_pair(rng):
    def one():
        lo = rng.uniform(0, 360)
        width = rng.choice([rng.uniform(0, 30), rng.uniform(0, 360), 360.0], p=[0.3, 0.6, 0.1])
        return sec(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0.5, 6.0), lo, lo + width)

    return one(), one()


def test_agrees_with_monte_carlo_oracle_sample():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b = random_pair(rng)
        area, hits = mc_intersection(a, b, 10_000, rng)
        sigma = math.pi * a.radius ** 2 * math.sqrt(max(hits, 1)) / 10_000
        tol = discretization_gap(a) + discretization_gap(b) + 3 * sigma
        if sectors_overlap(a, b) != (hits > 0):
            assert area < tol
