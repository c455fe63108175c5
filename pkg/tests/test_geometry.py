import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occlusim.geometry import (
    SENSOR_RANGE,
    Crossing,
    InvalidPolygonError,
    InvalidPolylineError,
    Polygon,
    Polyline,
    cast_fan,
    clip_polygon_to_box,
    disk_polygon,
    oriented_box,
    polygon_difference,
    polygon_intersection,
    polygon_union,
    shoelace_area,
)

from .oracles import (
    random_convex_polygon,
    raster_difference_area,
    raster_intersection_area,
    ray_hit,
    segment_pair_crossings,
)


def square(x0, y0, size):
    return Polygon([[(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)]])


class TestPolygonBasics:
    def test_orientation_normalized(self):
        cw = Polygon([[(0, 0), (0, 1), (1, 1), (1, 0)]])
        assert cw.area == pytest.approx(1.0)
        assert shoelace_area(cw.rings[0]) == pytest.approx(1.0)

    def test_too_few_vertices_rejected(self):
        with pytest.raises(InvalidPolygonError):
            Polygon([[(0, 0), (1, 0)]])

    def test_self_intersecting_rejected(self):
        with pytest.raises(InvalidPolygonError):
            Polygon([[(0, 0), (1, 1), (1, 0), (0, 1)]])

    def test_contains_and_bounds(self):
        p = square(0, 0, 2)
        assert p.contains((1, 1))
        assert not p.contains((3, 1))
        assert p.bounds == (0, 0, 2, 2)

    def test_wkt_roundtrippable(self):
        p = square(0, 0, 1)
        assert p.wkt.startswith("POLYGON")


class TestBooleanOps:
    def test_shifted_squares_quarter_overlap(self):
        a = square(0, 0, 1)
        b = square(0.5, 0.5, 1)
        parts = polygon_intersection(a, b)
        assert len(parts) == 1
        assert parts[0].area == pytest.approx(0.25, rel=1e-9)

    def test_self_intersection_idempotent(self):
        a = Polygon([random_convex_polygon(np.random.default_rng(3), (0, 0))])
        parts = polygon_intersection(a, a)
        assert len(parts) == 1
        assert parts[0].area == pytest.approx(a.area, rel=1e-9)

    def test_difference_identity_and_annihilation(self):
        a = square(0, 0, 2)
        far = square(100, 100, 1)
        kept = polygon_difference(a, far)
        assert len(kept) == 1 and kept[0].area == pytest.approx(4.0)
        assert polygon_difference(a, a) == []

    def test_square_minus_centered_square_has_hole(self):
        outer = square(0, 0, 4)
        inner = square(1, 1, 2)
        parts = polygon_difference(outer, inner)
        assert len(parts) == 1
        assert len(parts[0].rings) == 2
        assert parts[0].area == pytest.approx(16 - 4, rel=1e-9)
        oracle = raster_difference_area(outer.rings, inner.rings, cell=0.02)
        assert parts[0].area == pytest.approx(oracle, rel=0.01)

    def test_disjoint_intersection_empty(self):
        assert polygon_intersection(square(0, 0, 1), square(5, 5, 1)) == []

    def test_random_pairs_match_raster_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            a = Polygon([random_convex_polygon(rng, (0, 0))])
            b = Polygon([random_convex_polygon(rng, rng.uniform(-1.5, 1.5, 2))])
            got = sum(p.area for p in polygon_intersection(a, b))
            want = raster_intersection_area(a.rings, b.rings, cell=0.01)
            assert got == pytest.approx(want, abs=max(0.01 * want, 0.02))

    def test_union_of_touching_squares(self):
        parts = polygon_union([square(0, 0, 1), square(1, 0, 1)])
        assert len(parts) == 1
        assert parts[0].area == pytest.approx(2.0, rel=1e-6)


@st.composite
def convex_pair(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    a = random_convex_polygon(rng, (0, 0))
    b = random_convex_polygon(rng, rng.uniform(-2, 2, 2))
    return Polygon([a]), Polygon([b])


class TestBooleanIdentities:
    @settings(max_examples=60, deadline=None)
    @given(convex_pair())
    def test_partition_identity(self, pair):
        a, b = pair
        inter = sum(p.area for p in polygon_intersection(a, b))
        diff = sum(p.area for p in polygon_difference(a, b))
        assert inter + diff == pytest.approx(a.area, rel=1e-6, abs=1e-6)

    @settings(max_examples=60, deadline=None)
    @given(convex_pair())
    def test_union_identity(self, pair):
        a, b = pair
        union = sum(p.area for p in polygon_union([a, b]))
        inter = sum(p.area for p in polygon_intersection(a, b))
        assert union == pytest.approx(a.area + b.area - inter, rel=1e-6, abs=1e-6)

    def test_deterministic_outputs(self):
        rng = np.random.default_rng(11)
        a = Polygon([random_convex_polygon(rng, (0, 0))])
        b = Polygon([random_convex_polygon(rng, (1, 0.5))])
        r1 = polygon_intersection(a, b)
        r2 = polygon_intersection(a, b)
        assert all(np.array_equal(x.rings[0], y.rings[0]) for x, y in zip(r1, r2))


class TestCastFan:
    def test_empty_scene_is_range_disk(self):
        fan = cast_fan((0, 0), 10.0, [], math.radians(0.5))
        assert np.all(fan.distances == 10.0)
        assert all(lab == SENSOR_RANGE for lab in fan.labels)
        # regular polygon area approaches the disk area
        assert fan.polygon().area == pytest.approx(math.pi * 100, rel=1e-3)

    def test_wall_blocks_sector(self):
        # wall spanning the first-quadrant diagonal sector at 10 m
        wall = (np.array([20.0, -1.0]), np.array([20.0, 60.0]), "wall")
        fan = cast_fan((10, 0), 50.0, [wall], math.radians(0.5))
        hit = [i for i, lab in enumerate(fan.labels) if lab == "wall"]
        assert hit, "wall never hit"
        for i in hit:
            expected = 10.0 / math.cos(fan.angles[i])
            assert fan.distances[i] == pytest.approx(expected, abs=1e-6)

    def test_random_soup_matches_per_ray_oracle(self):
        rng = np.random.default_rng(21)
        segments = []
        for k in range(30):
            p = rng.uniform(-20, 20, 2)
            q = p + rng.uniform(-8, 8, 2)
            segments.append((p, q, f"e{k % 7}"))
        fan = cast_fan((0, 0), 25.0, segments, math.radians(1.0))
        for i, ang in enumerate(fan.angles):
            d = (math.cos(ang), math.sin(ang))
            dist, ent = ray_hit((0, 0), d, 25.0, segments)
            assert fan.distances[i] == pytest.approx(dist, abs=1e-6)
            assert fan.labels[i] == (ent if ent is not None else SENSOR_RANGE)

    def test_star_shape_property(self):
        rng = np.random.default_rng(5)
        segments = [
            (rng.uniform(-15, 15, 2), rng.uniform(-15, 15, 2), f"s{k}")
            for k in range(12)
        ]
        fan = cast_fan((1, 2), 20.0, segments, math.radians(2.0))
        verts = fan.polygon().rings[0]
        for i in range(len(verts)):
            d = np.hypot(*(verts[i] - np.array([1, 2])))
            assert d <= 20.0 + 1e-6

    def test_degenerate_segment_skipped(self):
        seg = (np.array([1.0, 1.0]), np.array([1.0, 1.0]), "dot")
        fan = cast_fan((0, 0), 5.0, [seg], math.radians(10))
        assert all(lab == SENSOR_RANGE for lab in fan.labels)


class TestPolyline:
    def test_zero_length_segment_rejected(self):
        with pytest.raises(InvalidPolylineError):
            Polyline([(0, 0), (0, 0), (1, 0)])

    def test_arclength_queries(self):
        line = Polyline([(0, 0), (3, 0), (3, 4)])
        assert line.length == pytest.approx(7.0)
        assert line.point_at(3.0) == pytest.approx([3, 0])
        assert line.point_at(5.0) == pytest.approx([3, 2])
        s, lat = line.project((1.0, 2.0))
        assert s == pytest.approx(1.0)
        assert lat == pytest.approx(2.0)  # left of the first segment

    def test_perpendicular_cross(self):
        a = Polyline([(-5, 0), (5, 0)])
        b = Polyline([(0, -5), (0, 5)])
        found = a and polyline_intersections(a, b)
        assert len(found) == 1
        assert found[0].arclength_on_a == pytest.approx(5.0)
        assert found[0].arclength_on_b == pytest.approx(5.0)
        assert not found[0].collinear

    def test_identical_polylines_flagged_collinear(self):
        a = Polyline([(0, 0), (10, 0), (10, 5)])
        found = polyline_intersections(a, Polyline(a.points.copy()))
        assert any(c.collinear for c in found)
        run = [c for c in found if c.collinear]
        assert sum(c.overlap_length for c in run) == pytest.approx(15.0, abs=1e-6)
        assert run[0].arclength_on_a == pytest.approx(0.0, abs=1e-9)

    def test_random_curves_match_bruteforce(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            pa = np.cumsum(rng.uniform(-2, 2.5, size=(8, 2)), axis=0)
            pb = np.cumsum(rng.uniform(-2.5, 2, size=(8, 2)), axis=0) + rng.uniform(-1, 1, 2)
            try:
                a, b = Polyline(pa), Polyline(pb)
            except InvalidPolylineError:
                continue
            got = [c for c in polyline_intersections(a, b) if not c.collinear]
            want = segment_pair_crossings(pa, pb)
            assert len(got) == len(want)
            for g, w in zip(got, want):
                assert g.arclength_on_a == pytest.approx(w[0], abs=1e-6)
                assert g.arclength_on_b == pytest.approx(w[1], abs=1e-6)

    def test_slice_preserves_geometry(self):
        line = Polyline([(0, 0), (10, 0), (10, 10)])
        part = line.slice(5, 15)
        assert part.length == pytest.approx(10.0)
        assert part.point_at(0) == pytest.approx([5, 0])
        assert part.point_at(10) == pytest.approx([10, 5])

    def test_curvature_of_arc(self):
        radius = 20.0
        ang = np.linspace(0, math.pi / 2, 50)
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * radius
        line = Polyline(pts)
        assert abs(line.curvature_at(line.length / 2)) == pytest.approx(1 / radius, rel=0.01)


class TestBoxClip:
    def test_quad_clip_area(self):
        quad = np.array([(0, 0), (4, 0), (4, 2), (0, 2)], dtype=float)
        clipped = clip_polygon_to_box(quad, 1, 1, 3, 5)
        assert shoelace_area(clipped) == pytest.approx(2.0)

    def test_outside_returns_none(self):
        tri = np.array([(10, 10), (11, 10), (10, 11)], dtype=float)
        assert clip_polygon_to_box(tri, 0, 0, 1, 1) is None


def polyline_intersections(a, b):
    from occlusim.geometry import polyline_intersections as f

    return f(a, b)


class TestHelpers:
    def test_oriented_box_dimensions(self):
        corners = oriented_box((5, 5), math.pi / 2, 4.0, 2.0)
        ext = corners.max(axis=0) - corners.min(axis=0)
        assert ext[0] == pytest.approx(2.0)
        assert ext[1] == pytest.approx(4.0)

    def test_disk_polygon_contains_center(self):
        d = disk_polygon((3, -2), 5.0)
        assert d.contains((3, -2))
