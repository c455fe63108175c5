"""Lanelet-style road map: geometry, connectivity and yield relations.

Maps are loaded from a small versioned YAML document (schema
``occlusim-map/1``) listing each lanelet as coordinate arrays in a local
metric frame. The map is fully validated at load time and immutable
afterwards, so it can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from occlusim.geometry import Polygon, Polyline

SCHEMA = "occlusim-map/1"
SUCCESSOR_GAP_TOL = 0.5  # max gap between a centerline end and its successor, m

PRIORITY_RELATIONS = ("a_yields_b", "b_yields_a", "uncontrolled")


class MapError(Exception):
    pass


class SchemaError(MapError):
    pass


class TopologyError(MapError):
    pass


@dataclass
class Lanelet:
    id: str
    left_bound: Polyline
    right_bound: Polyline
    centerline: Polyline
    successors: list[str]
    adjacent_left: str | None = None
    adjacent_left_same_direction: bool = False
    adjacent_right: str | None = None
    adjacent_right_same_direction: bool = False
    speed_limit: float = 15.0
    overtaking_allowed: bool = False
    polygon: Polygon = field(init=False, repr=False)

    def __post_init__(self):
        ring = np.vstack([self.left_bound.points, self.right_bound.points[::-1]])
        self.polygon = Polygon([ring], validate=False)

    @property
    def length(self) -> float:
        return self.centerline.length

    @property
    def width(self) -> float:
        mid = self.centerline.length / 2
        p = self.centerline.point_at(mid)
        _, dl = self.left_bound.project(p)
        _, dr = self.right_bound.project(p)
        return abs(dl) + abs(dr)


@dataclass
class IntersectionZone:
    id: str
    conflicting_lanelet_pairs: list[tuple[str, str, str]]
    entry_points: dict[str, float]

    def priority_between(self, a: str, b: str) -> str | None:
        """Relation for lanelet ``a`` against ``b``: yields/priority/uncontrolled."""
        for pa, pb, rel in self.conflicting_lanelet_pairs:
            if (pa, pb) == (a, b):
                return {"a_yields_b": "self_yields",
                        "b_yields_a": "other_yields",
                        "uncontrolled": "uncontrolled"}[rel]
            if (pa, pb) == (b, a):
                return {"a_yields_b": "other_yields",
                        "b_yields_a": "self_yields",
                        "uncontrolled": "uncontrolled"}[rel]
        return None


@dataclass
class LaneletMap:
    lanelets: dict[str, Lanelet]
    intersections: list[IntersectionZone]
    global_max_speed: float = 15.0

    def lanelet(self, lanelet_id: str) -> Lanelet:
        return self.lanelets[lanelet_id]

    def locate(self, point) -> list[tuple[str, float, float]]:
        """All lanelets containing ``point`` with centerline projection.

        Returns ``(lanelet_id, arclength, lateral_offset)`` tuples sorted by
        id; empty if the point is off-road.
        """
        hits = []
        for lid in sorted(self.lanelets):
            ll = self.lanelets[lid]
            if ll.polygon.contains(point):
                s, lat = ll.centerline.project(point)
                hits.append((lid, s, lat))
        return hits

    def bounds(self) -> tuple[float, float, float, float]:
        boxes = [ll.polygon.bounds for ll in self.lanelets.values()]
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )

    def zones_for_lanelet(self, lanelet_id: str) -> list[IntersectionZone]:
        return [z for z in self.intersections if lanelet_id in z.entry_points
                or any(lanelet_id in (a, b) for a, b, _ in z.conflicting_lanelet_pairs)]

    def validate(self) -> None:
        for lid, ll in self.lanelets.items():
            if ll.length < 1e-6:
                raise TopologyError(f"lanelet {lid} has zero length")
            for s in ll.successors:
                if s not in self.lanelets:
                    raise TopologyError(f"lanelet {lid}: dangling successor {s!r}")
                gap = np.hypot(
                    *(self.lanelets[s].centerline.points[0] - ll.centerline.points[-1])
                )
                if gap > SUCCESSOR_GAP_TOL:
                    raise TopologyError(
                        f"lanelet {lid} -> {s}: centerline gap {gap:.2f} m"
                    )
            for adj in (ll.adjacent_left, ll.adjacent_right):
                if adj is not None and adj not in self.lanelets:
                    raise TopologyError(f"lanelet {lid}: dangling adjacency {adj!r}")
            mid = ll.centerline.point_at(ll.length / 2)
            if not ll.polygon.contains(mid):
                raise TopologyError(f"lanelet {lid}: centerline outside bounds")
        for zone in self.intersections:
            for a, b, rel in zone.conflicting_lanelet_pairs:
                if a not in self.lanelets or b not in self.lanelets:
                    raise TopologyError(f"zone {zone.id}: unknown lanelet in pair ({a}, {b})")
                if rel not in PRIORITY_RELATIONS:
                    raise TopologyError(f"zone {zone.id}: bad priority {rel!r}")
            for lid, s in zone.entry_points.items():
                if lid not in self.lanelets:
                    raise TopologyError(f"zone {zone.id}: unknown entry lanelet {lid!r}")
                if not 0 <= s <= self.lanelets[lid].length + 1e-6:
                    raise TopologyError(
                        f"zone {zone.id}: entry point {s} outside lanelet {lid}"
                    )


def _require(doc: dict, key: str, kind, ctx: str):
    if key not in doc:
        raise SchemaError(f"{ctx}: missing field {key!r}")
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise SchemaError(f"{ctx}: field {key!r} has wrong type {type(value).__name__}")
    return value


def _coords(raw, ctx: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) < 2:
        raise SchemaError(f"{ctx}: expected a coordinate list")
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SchemaError(f"{ctx}: coordinates must be [x, y] pairs")
    return arr


def _midline(left: Polyline, right: Polyline) -> Polyline:
    n = max(len(left.points), len(right.points), 8)
    ss = np.linspace(0, 1, n)
    pts = np.array(
        [
            0.5 * (left.point_at(t * left.length) + right.point_at(t * right.length))
            for t in ss
        ]
    )
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
            keep.append(i)
    return Polyline(pts[keep])


def load_map(path) -> LaneletMap:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise SchemaError("map file is not a mapping")
    schema = _require(doc, "schema", str, "map")
    if schema != SCHEMA:
        raise SchemaError(f"unsupported schema {schema!r}")
    global_max = float(doc.get("global_max_speed", 15.0))

    lanelets: dict[str, Lanelet] = {}
    for entry in _require(doc, "lanelets", list, "map"):
        lid = _require(entry, "id", str, "lanelet")
        ctx = f"lanelet {lid}"
        left = Polyline(_coords(_require(entry, "left_bound", list, ctx), ctx))
        right = Polyline(_coords(_require(entry, "right_bound", list, ctx), ctx))
        if "centerline" in entry:
            center = Polyline(_coords(entry["centerline"], ctx))
        else:
            center = _midline(left, right)
        succ = entry.get("successors", [])
        if not isinstance(succ, list) or not all(isinstance(s, str) for s in succ):
            raise SchemaError(f"{ctx}: successors must be a list of ids")
        adj_l = entry.get("adjacent_left")
        adj_r = entry.get("adjacent_right")
        if lid in lanelets:
            raise SchemaError(f"duplicate lanelet id {lid!r}")
        lanelets[lid] = Lanelet(
            id=lid,
            left_bound=left,
            right_bound=right,
            centerline=center,
            successors=list(succ),
            adjacent_left=adj_l.get("id") if adj_l else None,
            adjacent_left_same_direction=bool(adj_l.get("same_direction", False)) if adj_l else False,
            adjacent_right=adj_r.get("id") if adj_r else None,
            adjacent_right_same_direction=bool(adj_r.get("same_direction", False)) if adj_r else False,
            speed_limit=min(float(entry.get("speed_limit", global_max)), global_max),
            overtaking_allowed=bool(entry.get("overtaking_allowed", False)),
        )

    zones = []
    for entry in doc.get("intersections", []):
        zid = _require(entry, "id", str, "intersection")
        pairs = []
        for pair in entry.get("conflicts", []):
            rel = pair.get("priority", "uncontrolled")
            if rel not in PRIORITY_RELATIONS:
                raise SchemaError(f"zone {zid}: bad priority {rel!r}")
            pairs.append((pair["a"], pair["b"], rel))
        entries = {k: float(v) for k, v in entry.get("entry_points", {}).items()}
        zones.append(IntersectionZone(id=zid, conflicting_lanelet_pairs=pairs,
                                      entry_points=entries))

    lmap = LaneletMap(lanelets=lanelets, intersections=zones, global_max_speed=global_max)
    lmap.validate()
    return lmap


def save_map(lmap: LaneletMap, path) -> None:
    doc = {
        "schema": SCHEMA,
        "global_max_speed": lmap.global_max_speed,
        "lanelets": [],
        "intersections": [],
    }
    for lid in sorted(lmap.lanelets):
        ll = lmap.lanelets[lid]
        entry = {
            "id": ll.id,
            "left_bound": ll.left_bound.points.tolist(),
            "right_bound": ll.right_bound.points.tolist(),
            "centerline": ll.centerline.points.tolist(),
            "successors": list(ll.successors),
            "speed_limit": ll.speed_limit,
            "overtaking_allowed": ll.overtaking_allowed,
        }
        if ll.adjacent_left:
            entry["adjacent_left"] = {
                "id": ll.adjacent_left,
                "same_direction": ll.adjacent_left_same_direction,
            }
        if ll.adjacent_right:
            entry["adjacent_right"] = {
                "id": ll.adjacent_right,
                "same_direction": ll.adjacent_right_same_direction,
            }
        doc["lanelets"].append(entry)
    for zone in lmap.intersections:
        doc["intersections"].append(
            {
                "id": zone.id,
                "conflicts": [
                    {"a": a, "b": b, "priority": rel}
                    for a, b, rel in zone.conflicting_lanelet_pairs
                ],
                "entry_points": dict(zone.entry_points),
            }
        )
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
