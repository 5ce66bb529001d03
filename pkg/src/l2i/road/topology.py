"""Road network types and lane realization.

A topology is stored as OpenDRIVE-like roads (reference line made of
line/arc primitives, constant-width lanes on both sides) plus junction
connection records. Lanes are realized as polylines sampled from the
reference line, all lanes of one road sharing the same parameter samples,
so that index ``i`` on one lane and index ``i`` on its neighbor lie on the
same cross-section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import MultiPoint, Polygon

KINDS = ("straightway", "bend", "roundabout", "cross", "t_shaped", "y_shaped")
JUNCTION_BOX_KINDS = ("cross", "t_shaped", "y_shaped")
SAMPLE_STEP = 0.5  # max polyline spacing on the outermost lane edge


@dataclass(frozen=True)
class Geometry:
    """One reference-line primitive; curvature 0 is a line, otherwise an arc."""

    s: float
    x: float
    y: float
    hdg: float
    length: float
    curvature: float = 0.0

    @property
    def kind(self) -> str:
        return "line" if self.curvature == 0.0 else "arc"

    def evaluate(self, t):
        """Position and heading at local arc length(s) t."""
        t = np.asarray(t, dtype=float)
        k = self.curvature
        if k == 0.0:
            x = self.x + t * math.cos(self.hdg)
            y = self.y + t * math.sin(self.hdg)
            h = np.full_like(t, self.hdg)
        else:
            h = self.hdg + k * t
            x = self.x + (np.sin(h) - math.sin(self.hdg)) / k
            y = self.y - (np.cos(h) - math.cos(self.hdg)) / k
        return x, y, h

    def end(self):
        x, y, h = self.evaluate(np.array([self.length]))
        return float(x[0]), float(y[0]), float(h[0])


@dataclass(frozen=True)
class RoadLink:
    element_type: str  # "road" or "junction"
    element_id: int
    contact_point: str | None = None  # "start" / "end" for roads


@dataclass(frozen=True)
class Road:
    id: int
    geometries: tuple[Geometry, ...]
    lane_width: float
    n_right: int
    n_left: int
    lane_offset: float = 0.0
    junction: int = -1
    predecessor: RoadLink | None = None
    successor: RoadLink | None = None
    name: str = ""

    @property
    def length(self) -> float:
        return float(sum(g.length for g in self.geometries))

    def lane_numbers(self):
        return [-k for k in range(1, self.n_right + 1)] + [k for k in range(1, self.n_left + 1)]


@dataclass(frozen=True)
class Connection:
    """Directed lane links from the end of `incoming` into `connecting`.

    `contact_point` says which end of the connecting road is entered.
    """

    id: int
    incoming: int
    connecting: int
    contact_point: str
    lane_links: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Junction:
    id: int
    connections: tuple[Connection, ...]
    name: str = ""


@dataclass(eq=False)
class Lane:
    lane_id: str
    road_id: int
    number: int
    centerline: np.ndarray
    width: float
    left_boundary: np.ndarray
    right_boundary: np.ndarray
    successors: list[str] = field(default_factory=list)
    predecessors: list[str] = field(default_factory=list)
    left_neighbor: str | None = None
    right_neighbor: str | None = None

    def __post_init__(self):
        seg = np.diff(self.centerline, axis=0)
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.seg_dir = seg / self.seg_len[:, None]
        self.seg_hdg = np.arctan2(seg[:, 1], seg[:, 0])
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.length = float(self.cum[-1])
        lo = self.centerline.min(axis=0) - self.width
        hi = self.centerline.max(axis=0) + self.width
        self.bbox = (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    def polygon(self) -> Polygon:
        ring = np.vstack([self.left_boundary, self.right_boundary[::-1]])
        return Polygon(ring)


def lane_key(road_id: int, number: int) -> str:
    return f"r{road_id}_{number}"


@dataclass(eq=False)
class RoadTopology:
    kind: str
    variant_id: str
    roads: tuple[Road, ...]
    junctions: tuple[Junction, ...]
    lanes: dict[str, Lane]
    drivable_boundary: object  # shapely (Multi)Polygon
    params: dict = field(default_factory=dict)

    @property
    def lane_list(self):
        return list(self.lanes.values())

    def lane(self, lane_id: str) -> Lane:
        try:
            return self.lanes[lane_id]
        except KeyError:
            raise KeyError(f"unknown lane {lane_id!r}") from None

    def road(self, road_id: int) -> Road:
        for r in self.roads:
            if r.id == road_id:
                return r
        raise KeyError(f"unknown road {road_id}")

    @property
    def lane_count(self) -> int:
        return int(self.params.get("lane_count", 0))

    @property
    def lane_width(self) -> float:
        return float(self.params.get("lane_width", 3.5))

    @property
    def ref(self) -> str:
        return f"{self.kind}/{self.variant_id}"

    def entry_lanes(self):
        return [lid for lid, ln in self.lanes.items() if not ln.predecessors]

    def contains(self, xy) -> np.ndarray:
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return shapely.contains_xy(self.drivable_boundary, xy[:, 0], xy[:, 1])

    def lanes_near(self, point, margin=0.0):
        x, y = float(point[0]), float(point[1])
        out = []
        for ln in self.lanes.values():
            x0, y0, x1, y1 = ln.bbox
            if x0 - margin <= x <= x1 + margin and y0 - margin <= y <= y1 + margin:
                out.append(ln)
        return out


def _road_samples(road: Road):
    """Reference-line parameters shared by all lanes of a road."""
    max_off = abs(road.lane_offset) + road.lane_width * max(road.n_right, road.n_left, 1)
    parts = []
    for i, g in enumerate(road.geometries):
        stretch = 1.0 + abs(g.curvature) * max_off
        n = max(1, math.ceil(g.length * stretch / SAMPLE_STEP - 1e-9))
        t = np.linspace(0.0, g.length, n + 1)
        if i > 0:
            t = t[1:]
        parts.append((g, t))
    xs, ys, hs = [], [], []
    for g, t in parts:
        x, y, h = g.evaluate(t)
        xs.append(x)
        ys.append(y)
        hs.append(h)
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(hs)


def _offset(x, y, h, off):
    return np.column_stack([x - off * np.sin(h), y + off * np.cos(h)])


def realize(kind, variant_id, roads, junctions, params, extra_area=()) -> RoadTopology:
    """Sample lanes, wire the lane graph and compute the drivable area."""
    lanes: dict[str, Lane] = {}
    for road in roads:
        x, y, h = _road_samples(road)
        w = road.lane_width
        a = road.lane_offset
        for k in range(1, road.n_right + 1):
            lanes[lane_key(road.id, -k)] = Lane(
                lane_id=lane_key(road.id, -k), road_id=road.id, number=-k,
                centerline=_offset(x, y, h, a - (k - 0.5) * w), width=w,
                left_boundary=_offset(x, y, h, a - (k - 1) * w),
                right_boundary=_offset(x, y, h, a - k * w),
                left_neighbor=lane_key(road.id, -(k - 1)) if k > 1 else None,
                right_neighbor=lane_key(road.id, -(k + 1)) if k < road.n_right else None,
            )
        for k in range(1, road.n_left + 1):
            lanes[lane_key(road.id, k)] = Lane(
                lane_id=lane_key(road.id, k), road_id=road.id, number=k,
                centerline=_offset(x, y, h, a + (k - 0.5) * w)[::-1].copy(), width=w,
                left_boundary=_offset(x, y, h, a + (k - 1) * w)[::-1].copy(),
                right_boundary=_offset(x, y, h, a + k * w)[::-1].copy(),
                left_neighbor=lane_key(road.id, k - 1) if k > 1 else None,
                right_neighbor=lane_key(road.id, k + 1) if k < road.n_left else None,
            )
    for j in junctions:
        for c in j.connections:
            for a_num, b_num in c.lane_links:
                src, dst = lane_key(c.incoming, a_num), lane_key(c.connecting, b_num)
                if src not in lanes or dst not in lanes:
                    raise ValueError(f"connection {c.id} references missing lane")
                if dst not in lanes[src].successors:
                    lanes[src].successors.append(dst)
                if src not in lanes[dst].predecessors:
                    lanes[dst].predecessors.append(src)
    polys = [ln.polygon() for ln in lanes.values()]
    if kind in JUNCTION_BOX_KINDS:
        polys += _junction_hulls(roads, junctions, lanes)
    area = shapely.unary_union(polys + list(extra_area))
    area = area.buffer(1e-3, join_style="mitre")
    return RoadTopology(kind, variant_id, tuple(roads), tuple(junctions), lanes, area, dict(params))


def _junction_hulls(roads, junctions, lanes):
    # connector lanes of one junction plus their convex hull form the junction box
    by_id = {r.id: r for r in roads}
    out = []
    for j in junctions:
        pts = []
        for c in j.connections:
            if by_id[c.connecting].junction != j.id:
                continue
            for ln in lanes.values():
                if ln.road_id == c.connecting:
                    pts.append(ln.left_boundary)
                    pts.append(ln.right_boundary)
        if pts:
            out.append(MultiPoint(np.vstack(pts)).convex_hull)
    return out


def check_invariants(topo: RoadTopology) -> list[str]:
    """Return a list of broken invariants (empty when the topology is sound)."""
    problems = []
    if topo.kind not in KINDS:
        problems.append(f"unknown kind {topo.kind}")
    for ln in topo.lanes.values():
        for name in ("left_boundary", "right_boundary", "centerline"):
            pts = getattr(ln, name)
            if len(pts) < 2 or np.allclose(pts[0], pts[-1]) and len(np.unique(pts, axis=0)) < 2:
                problems.append(f"{ln.lane_id}: degenerate {name}")
        if ln.length <= 0 or ln.width <= 0:
            problems.append(f"{ln.lane_id}: non-positive length or width")
        if ln.left_neighbor:
            nb = topo.lanes[ln.left_neighbor]
            if nb.right_neighbor != ln.lane_id:
                problems.append(f"{ln.lane_id}: asymmetric left neighbor")
            if np.max(np.abs(nb.right_boundary - ln.left_boundary)) > 1e-6:
                problems.append(f"{ln.lane_id}: boundary not shared with {nb.lane_id}")
        if ln.right_neighbor:
            nb = topo.lanes[ln.right_neighbor]
            if nb.left_neighbor != ln.lane_id:
                problems.append(f"{ln.lane_id}: asymmetric right neighbor")
    # reachability over successors and neighbors
    seen = set(topo.entry_lanes())
    stack = list(seen)
    while stack:
        ln = topo.lanes[stack.pop()]
        for nxt in ln.successors + [n for n in (ln.left_neighbor, ln.right_neighbor) if n]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    unreachable = set(topo.lanes) - seen
    if unreachable:
        problems.append(f"unreachable lanes: {sorted(unreachable)}")
    area = topo.drivable_boundary
    for ln in topo.lanes.values():
        for b in (ln.left_boundary, ln.right_boundary):
            inside = shapely.contains_xy(area, b[:, 0], b[:, 1])
            if not inside.all():
                problems.append(f"{ln.lane_id}: boundary leaves drivable area")
                break
    return problems


def topologies_equal(a: RoadTopology, b: RoadTopology, tol=1e-9) -> bool:
    """Structural equality: same roads, junctions, lane graph and geometry."""
    if (a.kind, a.variant_id, a.params) != (b.kind, b.variant_id, b.params):
        return False
    if a.roads != b.roads or a.junctions != b.junctions:
        return False
    if list(a.lanes) != list(b.lanes):
        return False
    for k, la in a.lanes.items():
        lb = b.lanes[k]
        if (la.successors, la.predecessors, la.left_neighbor, la.right_neighbor) != (
                lb.successors, lb.predecessors, lb.left_neighbor, lb.right_neighbor):
            return False
        if la.centerline.shape != lb.centerline.shape or np.max(np.abs(la.centerline - lb.centerline)) > tol:
            return False
    return True
