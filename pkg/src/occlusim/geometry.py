"""2-D geometry kernel: polygons, polylines and ray casting.

Boolean operations are delegated to shapely behind small value types; output
slivers below ``MIN_COMPONENT_AREA`` are dropped, and inputs that trip a
robustness error are retried on a 1e-6 m snap grid. Everything here is a pure
function of its inputs, so results are bit-identical across calls and safe to
share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import LineString, Point
from shapely.geometry import Polygon as ShapelyPolygon

SNAP_GRID = 1e-6           # vertex snap used before boolean ops, m
MIN_COMPONENT_AREA = 1e-4  # boolean-op components below this are noise, m^2
SENSOR_RANGE = "sensor_range"  # boundary label for rays that hit nothing


class InvalidPolygonError(ValueError):
    pass


class InvalidPolylineError(ValueError):
    pass


def _ring_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


class Polygon:
    """Simple polygon with optional holes.

    ``rings[0]`` is the outer boundary (counter-clockwise); the remaining
    rings are holes (clockwise). Rings are stored without a repeated closing
    vertex. Construction normalizes orientation and rejects rings with fewer
    than three vertices.
    """

    __slots__ = ("rings", "_shapely")

    def __init__(self, rings, validate: bool = True):
        if not rings:
            raise InvalidPolygonError("polygon needs at least an outer ring")
        norm = []
        for i, ring in enumerate(rings):
            pts = np.asarray(ring, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise InvalidPolygonError("ring must be an (n, 2) array")
            if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
                pts = pts[:-1]
            if len(pts) < 3:
                raise InvalidPolygonError("ring has fewer than 3 vertices")
            signed = _ring_area(pts)
            want_ccw = i == 0
            if (signed < 0) == want_ccw:
                pts = pts[::-1].copy()
            norm.append(pts)
        self.rings: list[np.ndarray] = norm
        self._shapely = None
        if validate and not self.to_shapely().is_valid:
            raise InvalidPolygonError("self-intersecting or degenerate ring")

    @classmethod
    def from_shapely(cls, geom: ShapelyPolygon) -> "Polygon":
        rings = [np.asarray(geom.exterior.coords)[:-1]]
        rings += [np.asarray(r.coords)[:-1] for r in geom.interiors]
        return cls(rings, validate=False)

    def to_shapely(self) -> ShapelyPolygon:
        if self._shapely is None:
            self._shapely = ShapelyPolygon(
                self.rings[0], [r for r in self.rings[1:]]
            )
        return self._shapely

    @property
    def area(self) -> float:
        return abs(_ring_area(self.rings[0])) - sum(
            abs(_ring_area(r)) for r in self.rings[1:]
        )

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        outer = self.rings[0]
        return (
            float(outer[:, 0].min()),
            float(outer[:, 1].min()),
            float(outer[:, 0].max()),
            float(outer[:, 1].max()),
        )

    @property
    def wkt(self) -> str:
        return self.to_shapely().wkt

    def contains(self, point) -> bool:
        return bool(self.to_shapely().covers(Point(point[0], point[1])))

    def intersects(self, other: "Polygon") -> bool:
        """Closed-set intersection test; boundary contact counts."""
        return bool(self.to_shapely().intersects(other.to_shapely()))

    def __repr__(self) -> str:
        return f"Polygon(verts={len(self.rings[0])}, area={self.area:.2f})"


def oriented_box(center, heading: float, length: float, width: float) -> np.ndarray:
    """Corner array (4, 2) of a rectangle centered at ``center``."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(center, dtype=float)


def disk_polygon(center, radius: float, n: int = 64) -> Polygon:
    ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * radius + np.asarray(center)
    return Polygon([pts], validate=False)


def _binary_op(a: Polygon, b: Polygon, op: str):
    ga, gb = a.to_shapely(), b.to_shapely()
    try:
        return getattr(ga, op)(gb)
    except shapely.errors.GEOSException:
        ga = shapely.set_precision(ga, SNAP_GRID)
        gb = shapely.set_precision(gb, SNAP_GRID)
        return getattr(ga, op)(gb)


def _extract_components(geom) -> list[Polygon]:
    if geom.is_empty:
        return []
    if geom.geom_type == "Polygon":
        parts = [geom]
    elif geom.geom_type in ("MultiPolygon", "GeometryCollection"):
        parts = [g for g in geom.geoms if g.geom_type == "Polygon"]
    else:
        return []
    out = [Polygon.from_shapely(g) for g in parts if g.area >= MIN_COMPONENT_AREA]
    out.sort(key=lambda p: (-p.area, p.bounds[0], p.bounds[1]))
    return out


def polygon_intersection(a: Polygon, b: Polygon) -> list[Polygon]:
    """Connected components of ``a & b``, largest first."""
    return _extract_components(_binary_op(a, b, "intersection"))


def polygon_difference(a: Polygon, b: Polygon) -> list[Polygon]:
    """Connected components of ``a - b``, largest first."""
    return _extract_components(_binary_op(a, b, "difference"))


def polygon_union(polys: list[Polygon]) -> list[Polygon]:
    if not polys:
        return []
    geoms = [p.to_shapely() for p in polys]
    try:
        geom = shapely.union_all(geoms)
    except shapely.errors.GEOSException:
        geom = shapely.union_all([shapely.set_precision(g, SNAP_GRID) for g in geoms])
    return _extract_components(geom)


class Polyline:
    """Ordered vertex chain with cumulative arc length.

    Zero-length segments are rejected at construction so the arc-length
    parametrization stays strictly increasing.
    """

    __slots__ = ("points", "cumulative_arclength", "_seg_dirs", "_seg_lens")

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise InvalidPolylineError("polyline needs at least 2 points")
        deltas = np.diff(pts, axis=0)
        lens = np.hypot(deltas[:, 0], deltas[:, 1])
        if np.any(lens < 1e-9):
            raise InvalidPolylineError("zero-length segment")
        self.points = pts
        self._seg_lens = lens
        self._seg_dirs = deltas / lens[:, None]
        self.cumulative_arclength = np.concatenate([[0.0], np.cumsum(lens)])

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    def _locate(self, s: float) -> tuple[int, float]:
        s = min(max(s, 0.0), self.length)
        idx = int(np.searchsorted(self.cumulative_arclength, s, side="right") - 1)
        idx = min(idx, len(self._seg_lens) - 1)
        return idx, s - self.cumulative_arclength[idx]

    def point_at(self, s: float) -> np.ndarray:
        idx, rem = self._locate(s)
        return self.points[idx] + self._seg_dirs[idx] * rem

    def tangent_at(self, s: float) -> np.ndarray:
        idx, _ = self._locate(s)
        return self._seg_dirs[idx]

    def heading_at(self, s: float) -> float:
        t = self.tangent_at(s)
        return math.atan2(t[1], t[0])

    def project(self, point) -> tuple[float, float]:
        """Arc length and signed lateral offset (left positive) of ``point``."""
        p = np.asarray(point, dtype=float)
        rel = p - self.points[:-1]
        t = np.einsum("ij,ij->i", rel, self._seg_dirs)
        t = np.clip(t, 0.0, self._seg_lens)
        feet = self.points[:-1] + self._seg_dirs * t[:, None]
        d2 = np.sum((feet - p) ** 2, axis=1)
        i = int(np.argmin(d2))
        s = float(self.cumulative_arclength[i] + t[i])
        dvec = p - feet[i]
        lateral = float(
            self._seg_dirs[i, 0] * dvec[1] - self._seg_dirs[i, 1] * dvec[0]
        )
        return s, lateral

    def curvature_at(self, s: float) -> float:
        """Discrete curvature from heading change around ``s``."""
        idx, _ = self._locate(s)
        if len(self._seg_lens) == 1:
            return 0.0
        j = min(max(idx, 1), len(self._seg_lens) - 1)
        h0 = math.atan2(self._seg_dirs[j - 1, 1], self._seg_dirs[j - 1, 0])
        h1 = math.atan2(self._seg_dirs[j, 1], self._seg_dirs[j, 0])
        dh = (h1 - h0 + math.pi) % (2.0 * math.pi) - math.pi
        ds = 0.5 * (self._seg_lens[j - 1] + self._seg_lens[j])
        return dh / ds if ds > 0 else 0.0

    def resample(self, step: float) -> "Polyline":
        n = max(2, int(math.ceil(self.length / step)) + 1)
        ss = np.linspace(0.0, self.length, n)
        return Polyline(np.array([self.point_at(s) for s in ss]))

    def slice(self, s0: float, s1: float) -> "Polyline":
        """Sub-polyline between arc lengths ``s0 <= s1``."""
        s0 = min(max(s0, 0.0), self.length)
        s1 = min(max(s1, 0.0), self.length)
        if s1 - s0 < 1e-9:
            s1 = min(s0 + 1e-6, self.length)
            s0 = max(0.0, s1 - 1e-6)
        inner = self.cumulative_arclength
        mask = (inner > s0 + 1e-9) & (inner < s1 - 1e-9)
        pts = [self.point_at(s0), *self.points[mask], self.point_at(s1)]
        arr = np.asarray(pts)
        keep = [0]
        for i in range(1, len(arr)):
            if np.hypot(*(arr[i] - arr[keep[-1]])) > 1e-9:
                keep.append(i)
        return Polyline(arr[keep])

    def to_shapely(self) -> LineString:
        return LineString(self.points)

    def __repr__(self) -> str:
        return f"Polyline(n={len(self.points)}, length={self.length:.2f})"


@dataclass(frozen=True)
class Crossing:
    """One intersection between two polylines, in both arc-length frames.

    Collinear overlap is reported once, flagged, with the overlap start as the
    crossing point and the shared length in ``overlap_length``.
    """

    arclength_on_a: float
    arclength_on_b: float
    collinear: bool = False
    overlap_length: float = 0.0


_PARALLEL_EPS = 1e-12


def polyline_intersections(a: Polyline, b: Polyline) -> list[Crossing]:
    """All crossing points of two polylines, sorted by arc length on ``a``."""
    crossings: list[Crossing] = []
    overlaps: list[tuple[float, float, float]] = []  # (sa0, sa1, sb_at_sa0)

    pa, pb = a.points, b.points
    for i in range(len(pa) - 1):
        a1 = pa[i]
        r = pa[i + 1] - a1
        rlen = a._seg_lens[i]
        for j in range(len(pb) - 1):
            b1 = pb[j]
            s = pb[j + 1] - b1
            slen = b._seg_lens[j]
            denom = r[0] * s[1] - r[1] * s[0]
            qp = b1 - a1
            qpxr = qp[0] * r[1] - qp[1] * r[0]
            if abs(denom) > _PARALLEL_EPS * max(rlen * slen, 1.0):
                t = (qp[0] * s[1] - qp[1] * s[0]) / denom
                u = qpxr / denom
                if -1e-9 <= t <= 1 + 1e-9 and -1e-9 <= u <= 1 + 1e-9:
                    crossings.append(
                        Crossing(
                            float(a.cumulative_arclength[i] + t * rlen),
                            float(b.cumulative_arclength[j] + u * slen),
                        )
                    )
            elif abs(qpxr) <= 1e-9 * max(rlen, 1.0):
                # collinear segments: record the overlap interval on a
                t0 = np.dot(qp, r) / (rlen * rlen)
                t1 = np.dot(qp + s, r) / (rlen * rlen)
                lo, hi = min(t0, t1), max(t0, t1)
                lo, hi = max(lo, 0.0), min(hi, 1.0)
                if hi - lo > 1e-9:
                    sa0 = float(a.cumulative_arclength[i] + lo * rlen)
                    sa1 = float(a.cumulative_arclength[i] + hi * rlen)
                    pt = a1 + lo * r
                    sb0, _ = b.project(pt)
                    overlaps.append((sa0, sa1, sb0))

    # merge touching collinear runs into one flagged interval each
    overlaps.sort()
    merged: list[list[float]] = []
    for sa0, sa1, sb0 in overlaps:
        if merged and sa0 <= merged[-1][1] + 1e-6:
            merged[-1][1] = max(merged[-1][1], sa1)
        else:
            merged.append([sa0, sa1, sb0])
    for sa0, sa1, sb0 in merged:
        crossings.append(Crossing(sa0, sb0, collinear=True, overlap_length=sa1 - sa0))

    # drop transversal crossings duplicated at shared vertices or inside overlaps
    out: list[Crossing] = []
    for c in sorted(crossings, key=lambda c: (c.arclength_on_a, c.arclength_on_b)):
        if any(
            not c.collinear
            and o.collinear
            and o.arclength_on_a - 1e-6 <= c.arclength_on_a <= o.arclength_on_a + o.overlap_length + 1e-6
            for o in crossings
        ):
            continue
        if out and not c.collinear and not out[-1].collinear:
            if (
                abs(out[-1].arclength_on_a - c.arclength_on_a) < 1e-7
                and abs(out[-1].arclength_on_b - c.arclength_on_b) < 1e-7
            ):
                continue
        out.append(c)
    return out


@dataclass
class StarPolygon:
    """Fan of ray hits around an origin, ordered by angle.

    ``distances[i]`` is the hit distance of ray ``i`` (clamped to the cast
    range) and ``labels[i]`` the id of the entity hit, or ``SENSOR_RANGE``.
    """

    origin: np.ndarray
    angles: np.ndarray
    distances: np.ndarray
    labels: list[str]
    _poly: Polygon | None = field(default=None, repr=False)

    def polygon(self) -> Polygon:
        if self._poly is None:
            dirs = np.stack([np.cos(self.angles), np.sin(self.angles)], axis=1)
            verts = self.origin + dirs * self.distances[:, None]
            self._poly = Polygon([verts], validate=False)
        return self._poly

    def edge_label(self, i: int) -> str:
        """Label of the boundary edge from vertex ``i`` to ``i + 1``.

        Attributed to the nearer of the two endpoint hits; the entity closer
        to the origin is the one actually limiting visibility there.
        """
        j = (i + 1) % len(self.labels)
        if self.distances[j] < self.distances[i] - 1e-9:
            return self.labels[j]
        return self.labels[i]


def cast_fan(
    origin,
    cast_range: float,
    segments: list[tuple[np.ndarray, np.ndarray, str]],
    angular_resolution: float,
) -> StarPolygon:
    """Cast an all-around fan of rays and return the visibility star.

    ``segments`` is a list of ``(p, q, entity_id)`` occluder edges. Rays are
    spaced ``angular_resolution`` apart starting at angle 0. Degenerate
    (zero-length) segments are skipped. Ties between equally distant hits are
    broken by entity id, then input order, so results do not depend on float
    summation order.
    """
    if cast_range <= 0:
        raise ValueError("cast_range must be positive")
    if angular_resolution <= 0:
        raise ValueError("angular_resolution must be positive")
    o = np.asarray(origin, dtype=float)
    n_rays = max(3, int(round(2.0 * math.pi / angular_resolution)))
    angles = np.arange(n_rays) * (2.0 * math.pi / n_rays)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    p_list, s_list, ids = [], [], []
    for p, q, entity_id in segments:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if np.hypot(*(q - p)) < 1e-9:
            continue
        p_list.append(p)
        s_list.append(q - p)
        ids.append(entity_id)

    distances = np.full(n_rays, cast_range, dtype=float)
    labels = [SENSOR_RANGE] * n_rays
    if p_list:
        P = np.asarray(p_list)              # (m, 2)
        S = np.asarray(s_list)              # (m, 2)
        QP = P - o                          # (m, 2)
        # denom[i, k] = cross(dir_i, seg_k)
        denom = dirs[:, 0, None] * S[None, :, 1] - dirs[:, 1, None] * S[None, :, 0]
        qpxr = QP[None, :, 0] * dirs[:, 1, None] - QP[None, :, 1] * dirs[:, 0, None]
        qpxs = QP[:, 0] * S[:, 1] - QP[:, 1] * S[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = qpxs[None, :] / denom
            u = qpxr / denom
        hit = (np.abs(denom) > 1e-12) & (t > 1e-9) & (u >= -1e-9) & (u <= 1 + 1e-9)
        t = np.where(hit, t, np.inf)
        best = t.min(axis=1)
        order = np.arange(len(ids))
        for i in range(n_rays):
            if best[i] < cast_range:
                cand = np.nonzero(t[i] <= best[i] + 1e-9)[0]
                k = min(cand, key=lambda c: (ids[c], order[c]))
                distances[i] = best[i]
                labels[i] = ids[k]
    return StarPolygon(origin=o, angles=angles, distances=distances, labels=labels)


def clip_polygon_to_box(pts: np.ndarray, xmin, ymin, xmax, ymax) -> np.ndarray | None:
    """Sutherland-Hodgman clip of a polygon against an axis-aligned box."""
    def clip_edge(poly, inside, intersect):
        out = []
        n = len(poly)
        for i in range(n):
            cur, nxt = poly[i], poly[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def x_cut(a, b, x):
        t = (x - a[0]) / (b[0] - a[0])
        return (x, a[1] + t * (b[1] - a[1]))

    def y_cut(a, b, y):
        t = (y - a[1]) / (b[1] - a[1])
        return (a[0] + t * (b[0] - a[0]), y)

    poly = [tuple(p) for p in pts]
    for inside, cut in (
        (lambda p: p[0] >= xmin, lambda a, b: x_cut(a, b, xmin)),
        (lambda p: p[0] <= xmax, lambda a, b: x_cut(a, b, xmax)),
        (lambda p: p[1] >= ymin, lambda a, b: y_cut(a, b, ymin)),
        (lambda p: p[1] <= ymax, lambda a, b: y_cut(a, b, ymax)),
    ):
        poly = clip_edge(poly, inside, cut)
        if not poly:
            return None
    return np.asarray(poly)


def shoelace_area(pts: np.ndarray) -> float:
    if pts is None or len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
