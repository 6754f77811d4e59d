import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull as ScipyHull

from coho.errors import DegenerateGeometry
from coho.geometry import (OrientedFrame, Polygon, convex_hull,
                           intersection_area, is_convex,
                           oriented_bounding_frame, point_to_polygon_distance,
                           points_in_polygon, polygon_area, polygon_centroid,
                           polygon_min_distance, triangulate)

SQUARE = Polygon([(0, 0), (2, 0), (2, 2), (0, 2)])
TRIANGLE = Polygon([(0, 0), (4, 0), (0, 3)])
L_SHAPE = Polygon([(0, 0), (3, 0), (3, 1), (1, 1), (1, 3), (0, 3)])


def random_convex(rng, n=8, scale=10.0, offset=(0.0, 0.0)):
    pts = rng.uniform(-scale, scale, size=(n, 2)) + np.asarray(offset)
    hull = ScipyHull(pts)
    return Polygon(pts[hull.vertices])


def random_simple(rng, n=7, scale=10.0, offset=(0.0, 0.0)):
    """Star-shaped (hence simple) polygon around a center."""
    # one angle per sector keeps the star ring simple
    angles = (np.arange(n) + rng.uniform(0.1, 0.9, size=n)) * 2 * math.pi / n
    radii = rng.uniform(0.3 * scale, scale, size=n)
    pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    return Polygon(pts + np.asarray(offset))


def mc_intersection_area(a: Polygon, b: Polygon, n=200_000, seed=0):
    """Monte-Carlo oracle for the intersection area."""
    rng = np.random.default_rng(seed)
    lo = np.minimum(a.vertices.min(axis=0), b.vertices.min(axis=0))
    hi = np.maximum(a.vertices.max(axis=0), b.vertices.max(axis=0))
    pts = rng.uniform(lo, hi, size=(n, 2))
    inside = points_in_polygon(pts, a) & points_in_polygon(pts, b)
    box = float(np.prod(hi - lo))
    return box * inside.mean()


class TestPolygon:
    def test_area_square(self):
        assert polygon_area(SQUARE) == pytest.approx(4.0)

    def test_area_triangle(self):
        assert polygon_area(TRIANGLE) == pytest.approx(6.0)

    def test_cw_input_normalized_to_ccw(self):
        p = Polygon([(0, 0), (0, 2), (2, 2), (2, 0)])  # clockwise
        assert polygon_area(p) == pytest.approx(4.0)
        # shoelace on stored ring must already be positive
        v = p.vertices
        s = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1)
                         - np.roll(v[:, 0], -1) * v[:, 1])
        assert s > 0

    def test_duplicate_vertices_dropped(self):
        p = Polygon([(0, 0), (0, 0), (1, 0), (1, 1), (0, 1), (0, 1), (0, 0)])
        assert len(p) == 4

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateGeometry):
            Polygon([(0, 0), (1, 1)])
        with pytest.raises(DegenerateGeometry):
            Polygon([(0, 0), (1, 0), (2, 0)])  # collinear, zero area

    def test_self_intersecting_rejected(self):
        with pytest.raises(DegenerateGeometry):
            Polygon([(0, 0), (2, 2), (2, 0), (0, 2)])  # bowtie

    def test_centroid_square(self):
        assert polygon_centroid(SQUARE) == pytest.approx([1.0, 1.0])

    def test_centroid_triangle(self):
        assert polygon_centroid(TRIANGLE) == pytest.approx([4 / 3, 1.0])


class TestHull:
    def test_hull_of_convex_is_itself(self):
        h = convex_hull(SQUARE)
        assert polygon_area(h) == pytest.approx(4.0)

    def test_hull_l_shape(self):
        h = convex_hull(L_SHAPE)
        assert polygon_area(h) == pytest.approx(polygon_area(
            Polygon([(0, 0), (3, 0), (3, 1), (1, 3), (0, 3)])))

    def test_hull_matches_scipy(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = random_simple(rng)
            ours = polygon_area(convex_hull(p))
            theirs = ScipyHull(p.vertices).volume  # 2-D "volume" is area
            assert ours == pytest.approx(theirs, rel=1e-9)

    def test_is_convex(self):
        assert is_convex(SQUARE)
        assert not is_convex(L_SHAPE)


class TestTriangulate:
    def test_area_preserved(self):
        rng = np.random.default_rng(2)
        for p in [SQUARE, TRIANGLE, L_SHAPE] + [random_simple(rng)
                                                for _ in range(30)]:
            tri_area = sum(
                abs(0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1])
                           - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])))
                for t in triangulate(p))
            assert tri_area == pytest.approx(polygon_area(p), rel=1e-9)


class TestIntersectionArea:
    def test_disjoint(self):
        b = Polygon([(10, 10), (11, 10), (11, 11), (10, 11)])
        assert intersection_area(SQUARE, b) == 0.0

    def test_contained(self):
        inner = Polygon([(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)])
        assert intersection_area(SQUARE, inner) == pytest.approx(1.0)

    def test_half_overlap(self):
        b = Polygon([(1, 0), (3, 0), (3, 2), (1, 2)])
        assert intersection_area(SQUARE, b) == pytest.approx(2.0)

    def test_identical(self):
        assert intersection_area(SQUARE, SQUARE) == pytest.approx(4.0)

    def test_nonconvex_pair_exact(self):
        # L-shape vs unit square at the notch: overlap is only the bottom bar
        b = Polygon([(0.5, 0.5), (2.5, 0.5), (2.5, 2.5), (0.5, 2.5)])
        # overlap with L: bottom bar [0.5,2.5]x[0.5,1] + stem [0.5,1]x[1,2.5]
        expected = 2.0 * 0.5 + 0.5 * 1.5
        assert intersection_area(L_SHAPE, b) == pytest.approx(expected)

    def test_monte_carlo_convex_pairs(self):
        rng = np.random.default_rng(3)
        for k in range(10):
            a = random_convex(rng)
            b = random_convex(rng, offset=rng.uniform(-5, 5, 2))
            exact = intersection_area(a, b)
            mc = mc_intersection_area(a, b, seed=k)
            box = np.prod(np.maximum(a.vertices.max(0), b.vertices.max(0))
                          - np.minimum(a.vertices.min(0), b.vertices.min(0)))
            assert exact == pytest.approx(mc, abs=0.01 * box)

    def test_monte_carlo_nonconvex_pairs(self):
        rng = np.random.default_rng(4)
        for k in range(10):
            a = random_simple(rng)
            b = random_simple(rng, offset=rng.uniform(-4, 4, 2))
            exact = intersection_area(a, b)
            mc = mc_intersection_area(a, b, seed=100 + k)
            box = np.prod(np.maximum(a.vertices.max(0), b.vertices.max(0))
                          - np.minimum(a.vertices.min(0), b.vertices.min(0)))
            assert exact == pytest.approx(mc, abs=0.01 * box)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_commutative_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a = random_convex(rng)
        b = random_simple(rng, offset=rng.uniform(-6, 6, 2))
        ab = intersection_area(a, b)
        ba = intersection_area(b, a)
        assert ab == pytest.approx(ba, rel=1e-6, abs=1e-6)
        assert -1e-9 <= ab <= min(polygon_area(a), polygon_area(b)) + 1e-6


def brute_force_min_area_rect(p: Polygon, n_angles=20_000):
    """Dense angle-scan oracle for the minimum-area bounding rectangle."""
    best = math.inf
    pts = p.vertices
    for phi in np.linspace(0, math.pi / 2, n_angles, endpoint=False):
        u = np.array([math.cos(phi), math.sin(phi)])
        v = np.array([-u[1], u[0]])
        w = np.ptp(pts @ u)
        h = np.ptp(pts @ v)
        best = min(best, w * h)
    return best


class TestOrientedFrame:
    def test_axis_aligned_rect(self):
        f = oriented_bounding_frame(Polygon([(1, 1), (5, 1), (5, 3), (1, 3)]))
        assert f.extent == pytest.approx((4.0, 2.0))
        assert abs(f.axes[0] @ [1, 0]) == pytest.approx(1.0)

    def test_width_ge_height(self):
        f = oriented_bounding_frame(Polygon([(0, 0), (2, 0), (2, 7), (0, 7)]))
        assert f.extent[0] >= f.extent[1]
        assert f.extent == pytest.approx((7.0, 2.0))

    def test_rotated_rect_recovered(self):
        base = np.array([(0, 0), (6, 0), (6, 2), (0, 2)], float)
        theta = 0.7
        R = np.array([[math.cos(theta), -math.sin(theta)],
                      [math.sin(theta), math.cos(theta)]])
        f = oriented_bounding_frame(Polygon(base @ R.T + [3, 4]))
        assert sorted(f.extent, reverse=True) == pytest.approx([6.0, 2.0])

    def test_min_area_matches_angle_scan(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = random_simple(rng)
            f = oriented_bounding_frame(p)
            ours = f.extent[0] * f.extent[1]
            oracle = brute_force_min_area_rect(p)
            assert ours == pytest.approx(oracle, rel=1e-4)

    def test_local_coordinates_inside_extent(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            p = random_simple(rng)
            f = oriented_bounding_frame(p)
            local = f.to_local(p.vertices)
            assert local[:, 0].min() >= -1e-6
            assert local[:, 0].max() <= f.extent[0] + 1e-6
            assert local[:, 1].min() >= -1e-6
            assert local[:, 1].max() <= f.extent[1] + 1e-6

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        p = random_simple(rng)
        f = oriented_bounding_frame(p)
        back = f.to_world(f.to_local(p.vertices))
        assert np.allclose(back, p.vertices, atol=1e-9)

    def test_rotation_invariant_extents(self):
        # non-degenerate rotations preserve the frame extents
        rng = np.random.default_rng(8)
        p = random_simple(rng)
        f0 = oriented_bounding_frame(p)
        for theta in (0.3, 1.1, 2.0):
            R = np.array([[math.cos(theta), -math.sin(theta)],
                          [math.sin(theta), math.cos(theta)]])
            f1 = oriented_bounding_frame(Polygon(p.vertices @ R.T))
            assert f1.extent == pytest.approx(f0.extent, rel=1e-9)

    def test_orthonormality_enforced(self):
        with pytest.raises(DegenerateGeometry):
            OrientedFrame((0, 0), np.array([[1.0, 0.0], [1.0, 0.0]]), (1, 1))


class TestPointQueries:
    def test_points_in_polygon(self):
        pts = np.array([[1.0, 1.0], [3.0, 3.0], [-1.0, 0.5]])
        assert list(points_in_polygon(pts, SQUARE)) == [True, False, False]

    def test_point_distance(self):
        assert point_to_polygon_distance((3, 1), SQUARE) == pytest.approx(1.0)
        assert point_to_polygon_distance((2, 2), SQUARE) == pytest.approx(0.0)

    def test_min_distance_disjoint(self):
        b = Polygon([(5, 0), (6, 0), (6, 2), (5, 2)])
        assert polygon_min_distance(SQUARE, b) == pytest.approx(3.0)

    def test_min_distance_overlapping_is_zero(self):
        b = Polygon([(1, 1), (3, 1), (3, 3), (1, 3)])
        assert polygon_min_distance(SQUARE, b) == 0.0

    def test_min_distance_diagonal(self):
        b = Polygon([(3, 3), (4, 3), (4, 4), (3, 4)])
        assert polygon_min_distance(SQUARE, b) == pytest.approx(math.sqrt(2))
