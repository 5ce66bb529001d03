"""Parametric builders for the six topology families.

Conventions: ``lane_count`` is the number of lanes per travel direction;
negative lane numbers travel along the reference line, positive ones
against it. Arms of junction families point away from the junction
center; their reference line runs inbound, so negative lanes are the
incoming ones.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterRangeError
from .topology import KINDS, Connection, Geometry, Junction, Road, RoadLink, RoadTopology, realize

SCALE_BOUNDS = {
    "straightway": (100.0, 400.0),  # length, m
    "bend": (30.0, 120.0),  # bend angle, degrees
    "roundabout": (12.0, 40.0),  # inner ring lane radius, m
    "cross": (50.0, 150.0),  # arm length, m
    "t_shaped": (50.0, 150.0),
    "y_shaped": (50.0, 150.0),
}

# Two built-in variants per family: "b" doubles the lanes and changes shape.
VARIANTS = {
    "straightway": {"a": dict(lane_count=2, scale=260.0, variant_seed=0),
                    "b": dict(lane_count=4, scale=380.0, variant_seed=1)},
    "bend": {"a": dict(lane_count=2, scale=60.0, variant_seed=0),
             "b": dict(lane_count=4, scale=90.0, variant_seed=1)},
    "roundabout": {"a": dict(lane_count=2, scale=25.0, variant_seed=0),
                   "b": dict(lane_count=4, scale=40.0, variant_seed=1)},
    "cross": {"a": dict(lane_count=2, scale=120.0, variant_seed=0),
              "b": dict(lane_count=4, scale=150.0, variant_seed=1)},
    "t_shaped": {"a": dict(lane_count=2, scale=120.0, variant_seed=0),
                 "b": dict(lane_count=4, scale=150.0, variant_seed=1)},
    "y_shaped": {"a": dict(lane_count=2, scale=120.0, variant_seed=0),
                 "b": dict(lane_count=4, scale=150.0, variant_seed=1)},
}

ARM_ANGLES = {
    ("cross", 0): (0.0, 90.0, 180.0, 270.0),
    ("cross", 1): (0.0, 70.0, 180.0, 250.0),
    ("t_shaped", 0): (0.0, 180.0, 270.0),
    ("t_shaped", 1): (0.0, 180.0, 300.0),
    ("y_shaped", 0): (270.0, 30.0, 150.0),
    ("y_shaped", 1): (270.0, 45.0, 135.0),
    ("roundabout", 0): (0.0, 120.0, 240.0),
    ("roundabout", 1): (0.0, 90.0, 180.0, 270.0),
}

STRAIGHT_TOL = math.radians(30.0)


def wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _unit(a):
    return np.array([math.cos(a), math.sin(a)])


def fillet(p0, h0, p1, h1, min_radius=0.0):
    """Line-arc-line path from pose (p0, h0) to pose (p1, h1).

    Uses the largest arc tangent to both rays. Returns a list of
    Geometry or None if the rays do not meet ahead of p0 and behind p1.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    d0, d1 = _unit(h0), _unit(h1)
    delta = wrap(h1 - h0)
    if abs(delta) < 1e-9:
        gap = p1 - p0
        along = float(gap @ d0)
        if along <= 0 or abs(float(d0[0] * gap[1] - d0[1] * gap[0])) > 1e-6:
            return None
        return [Geometry(0.0, float(p0[0]), float(p0[1]), h0, along)]
    m = np.column_stack([d0, d1])
    t, u = np.linalg.solve(m, p1 - p0)
    if t <= 0 or u <= 0:
        return None
    tan_half = math.tan(abs(delta) / 2.0)
    radius = min(t, u) / tan_half
    if radius < min_radius:
        return None
    leg = radius * tan_half
    geoms = []
    s = 0.0
    x, y, h = float(p0[0]), float(p0[1]), h0
    if t - leg > 1e-9:
        geoms.append(Geometry(s, x, y, h, t - leg))
        x, y, h = geoms[-1].end()
        s += t - leg
    arc = Geometry(s, x, y, h, radius * abs(delta), math.copysign(1.0 / radius, delta))
    geoms.append(arc)
    x, y, h = arc.end()
    s += arc.length
    if u - leg > 1e-9:
        geoms.append(Geometry(s, x, y, h1, u - leg))
    return geoms


def _check(kind, lane_count, lane_width, scale):
    if kind not in KINDS:
        raise ParameterRangeError(f"unknown topology kind {kind!r}")
    if not isinstance(lane_count, (int, np.integer)) or lane_count < 1:
        raise ParameterRangeError(f"lane_count must be an integer >= 1, got {lane_count!r}")
    if lane_count > 8:
        raise ParameterRangeError(f"lane_count {lane_count} exceeds supported maximum 8")
    if not (lane_width > 0):
        raise ParameterRangeError(f"lane_width must be > 0, got {lane_width!r}")
    lo, hi = SCALE_BOUNDS[kind]
    if not (lo <= scale <= hi):
        raise ParameterRangeError(f"{kind} scale {scale} outside [{lo}, {hi}]")


def build_topology(kind, lane_count=2, lane_width=3.5, scale=None, variant_seed=0, variant_id=None):
    """Build a topology of the given family.

    `scale` is the family's size parameter (see SCALE_BOUNDS); `variant_seed`
    selects the shape flavor (0 or 1, other values wrap).
    """
    if kind in SCALE_BOUNDS and scale is None:
        scale = VARIANTS[kind]["a"]["scale"]
    _check(kind, lane_count, lane_width, scale)
    shape = int(variant_seed) % 2
    if variant_id is None:
        variant_id = f"n{lane_count}s{shape}"
    params = dict(lane_count=int(lane_count), lane_width=float(lane_width), scale=float(scale),
                  variant_seed=int(variant_seed))
    builder = {
        "straightway": _straightway,
        "bend": _bend,
        "roundabout": _roundabout,
    }.get(kind, _junction)
    roads, junctions, extra = builder(kind, int(lane_count), float(lane_width), float(scale), shape)
    return realize(kind, variant_id, roads, junctions, params, extra)


def build_variant(kind, variant_id):
    try:
        p = VARIANTS[kind][variant_id]
    except KeyError:
        raise ParameterRangeError(f"no built-in variant {kind}/{variant_id}") from None
    return build_topology(kind, p["lane_count"], 3.5, p["scale"], p["variant_seed"], variant_id)


def builtin_refs():
    return [f"{k}/{v}" for k in KINDS for v in ("a", "b")]


def _straightway(kind, n, w, length, shape):
    road = Road(0, (Geometry(0.0, 0.0, 0.0, 0.0, length),), w, n, n, name="main")
    return [road], [], []


def _bend(kind, n, w, angle_deg, shape):
    leg = 100.0
    radius = 30.0 + 2.0 * n * w
    sign = 1.0 if shape == 0 else -1.0
    g0 = Geometry(0.0, 0.0, 0.0, 0.0, leg)
    arc = Geometry(leg, leg, 0.0, 0.0, radius * math.radians(angle_deg), sign / radius)
    x, y, h = arc.end()
    g2 = Geometry(leg + arc.length, x, y, h, leg)
    road = Road(0, (g0, arc, g2), w, n, n, name="main")
    return [road], [], []


def _lane_point(center_dist, phi, offset):
    """Point on an arm axis at distance `center_dist`, shifted left of the inbound heading."""
    h = phi + math.pi
    base = center_dist * _unit(phi)
    return base + offset * np.array([-math.sin(h), math.cos(h)])


def _connector_road(rid, geoms, w, junction, name):
    # One lane centered on the reference line.
    return Road(rid, tuple(geoms), w, 1, 0, lane_offset=w / 2.0, junction=junction, name=name)


def turn_kind(phi_in, phi_out):
    """Classify a movement from arm phi_in to arm phi_out (radians)."""
    delta = wrap(phi_out - phi_in - math.pi)
    if abs(delta) < STRAIGHT_TOL:
        return "straight"
    return "left" if delta > 0 else "right"


def _junction(kind, n, w, arm_len, shape):
    angles = [math.radians(a) for a in ARM_ANGLES[(kind, shape)]]
    m = len(angles)
    srt = sorted(a % (2 * math.pi) for a in angles)
    gaps = [(srt[(i + 1) % m] - srt[i]) % (2 * math.pi) for i in range(m)]
    gap = min(gaps)
    dist = n * w / math.tan(gap / 2.0) + 6.0
    while True:
        plan = _junction_plan(angles, n, w, dist)
        if plan is not None:
            break
        dist += 1.0
    roads = []
    for i, phi in enumerate(angles):
        far = (dist + arm_len) * _unit(phi)
        g = Geometry(0.0, float(far[0]), float(far[1]), wrap(phi + math.pi), arm_len)
        roads.append(Road(i, (g,), w, n, n, successor=RoadLink("junction", 0), name=f"arm{i}"))
    conns = []
    rid = 100
    for (a, b, ja, jb, geoms, turn) in plan:
        roads.append(_connector_road(rid, geoms, w, 0, f"{turn}:{a}->{b}"))
        conns.append(Connection(len(conns), a, rid, "start", ((-ja, -1),)))
        conns.append(Connection(len(conns), rid, b, "end", ((-1, jb),)))
        rid += 1
    junction = Junction(0, tuple(conns), name="center")
    return roads, [junction], []


def _junction_plan(angles, n, w, dist):
    plan = []
    for a, pa in enumerate(angles):
        for b, pb in enumerate(angles):
            if a == b:
                continue
            turn = turn_kind(pa, pb)
            if turn == "straight":
                pairs = [(j, j) for j in range(1, n + 1)]
            elif turn == "left":
                pairs = [(1, 1)]
            else:
                pairs = [(n, n)]
            for ja, jb in pairs:
                p0 = _lane_point(dist, pa, -(ja - 0.5) * w)
                p1 = _lane_point(dist, pb, (jb - 0.5) * w)
                geoms = fillet(p0, wrap(pa + math.pi), p1, pb, min_radius=6.0 if turn != "straight" else 0.0)
                if geoms is None:
                    return None
                plan.append((a, b, ja, jb, geoms, turn))
    return plan


def _roundabout(kind, n, w, radius, shape):
    angles = [math.radians(a) for a in ARM_ANGLES[(kind, shape)]]
    m = len(angles)
    arm_len = 80.0
    r_ref = radius - w / 2.0  # reference circle; lane -1 centerline sits at `radius`
    r_out = radius + (n - 1) * w  # outer ring lane centerline
    o_max = (n - 0.5) * w
    gap = 2 * math.pi / m
    ents = None
    for margin in np.arange(3.0, 3.0 + 3.0 * r_out, 1.0):
        sin_d = (o_max + margin) / r_out
        if sin_d >= 0.95:
            break
        delta = math.asin(sin_d)
        if gap - 2 * delta < math.radians(10.0):
            break
        for dist in np.arange(radius + n * w + 4.0, radius + n * w + 60.0, 1.0):
            ents, exits = _roundabout_connectors(angles, n, w, r_out, delta, float(dist))
            if ents is not None:
                break
        if ents is not None:
            break
    if ents is None:
        raise ParameterRangeError(f"roundabout radius {radius} too small for {n} lanes")
    dist = float(dist)

    def ring_arc(a0, a1):
        return (Geometry(0.0, r_ref * math.cos(a0), r_ref * math.sin(a0), wrap(a0 + math.pi / 2),
                         r_ref * (a1 - a0), 1.0 / r_ref),)

    roads = []
    # ids: arms 0..m-1, ring-between-arms 10+k, ring-at-arm 20+k, connectors 100+
    for k, phi in enumerate(angles):
        far = (dist + arm_len) * _unit(phi)
        g = Geometry(0.0, float(far[0]), float(far[1]), wrap(phi + math.pi), arm_len)
        roads.append(Road(k, (g,), w, n, n, successor=RoadLink("junction", 2 * k + 1), name=f"arm{k}"))
    for k, phi in enumerate(angles):
        nxt = angles[(k + 1) % m] + (2 * math.pi if k + 1 == m else 0.0)
        roads.append(Road(10 + k, ring_arc(phi + delta, nxt - delta), w, n, 0,
                          predecessor=RoadLink("junction", 2 * k + 1),
                          successor=RoadLink("junction", 2 * ((k + 1) % m)), name=f"ring{k}"))
        roads.append(Road(20 + k, ring_arc(phi - delta, phi + delta), w, n, 0,
                          predecessor=RoadLink("junction", 2 * k),
                          successor=RoadLink("junction", 2 * k + 1), name=f"ringarm{k}"))
    junctions = []
    rid = 100
    for k in range(m):
        prev = 10 + (k - 1) % m
        # exit junction at phi_k - delta
        conns = [Connection(0, prev, 20 + k, "start", tuple((-j, -j) for j in range(1, n + 1)))]
        for j, geoms in exits[k]:
            roads.append(_connector_road(rid, geoms, w, 2 * k, f"exit{k}:{j}"))
            conns.append(Connection(len(conns), prev, rid, "start", ((-n, -1),)))
            conns.append(Connection(len(conns), rid, k, "end", ((-1, j),)))
            rid += 1
        junctions.append(Junction(2 * k, tuple(conns), name=f"exit{k}"))
        # entry junction at phi_k + delta
        conns = [Connection(0, 20 + k, 10 + k, "start", tuple((-j, -j) for j in range(1, n + 1)))]
        for j, geoms in ents[k]:
            roads.append(_connector_road(rid, geoms, w, 2 * k + 1, f"entry{k}:{j}"))
            conns.append(Connection(len(conns), k, rid, "start", ((-j, -1),)))
            conns.append(Connection(len(conns), rid, 10 + k, "start", ((-1, -n),)))
            rid += 1
        junctions.append(Junction(2 * k + 1, tuple(conns), name=f"entry{k}"))
    return roads, junctions, []


def _roundabout_connectors(angles, n, w, r_out, delta, dist):
    ents, exits = [], []
    for phi in angles:
        e_list, x_list = [], []
        for j in range(1, n + 1):
            p0 = _lane_point(dist, phi, -(j - 0.5) * w)
            p1 = r_out * _unit(phi + delta)
            g = fillet(p0, wrap(phi + math.pi), p1, wrap(phi + delta + math.pi / 2), min_radius=5.0)
            if g is None:
                return None, None
            e_list.append((j, g))
            p0 = r_out * _unit(phi - delta)
            p1 = _lane_point(dist, phi, (j - 0.5) * w)
            g = fillet(p0, wrap(phi - delta + math.pi / 2), p1, phi, min_radius=5.0)
            if g is None:
                return None, None
            x_list.append((j, g))
        ents.append(e_list)
        exits.append(x_list)
    return ents, exits
