"""Program-level scene design for the sampler.

One attempt lays the ego out on a home route with a three-phase speed
profile (speed up, cruise, slow to a stop) and then places obstacles
relative to that profile:

* yield: a convoy of faster cars starting behind the ego in a side lane
* overtake: slower movers ahead of the ego, either in a side lane or in the
  ego lane (passed by changing out and back)
* bypass: static objects in the ego lane, passed by changing out and back

Positions are tracked in home-path coordinates x, metres along the home
route measured from the ego start; side lanes map onto x through shared
cross-sections. Nothing here is trusted: the caller compiles, simulates
and listens to the result before accepting it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..motion import ChangeLane, Cruise, MotionProgram, StartPose, Stop
from ..paths import advance, frac_index, station_at_frac, straightest_successor
from ..road.frenet import point_at, project
from ..script import DEFAULT_FOOTPRINTS

SPEED_CAP = {"ego_car": 15.0, "npc_car": 15.0, "bicycle": 5.0, "pedestrian": 1.5, "traffic_cone": 0.0}
END_MARGIN = 4.0  # knots stay this far from lane ends
CONVOY_GAP = 4.0  # free space between convoy members
EGO_EXTENT = DEFAULT_FOOTPRINTS["ego_car"].extent
RING_EXTRA = 4  # extra ring lanes a roundabout route may run through
EGO_SPEED = {"roundabout": (5.0, 9.0)}
GOAL_CONNECTOR = {"straight": "straight", "turn_left": "left", "turn_right": "right"}

STATIC_CLASSES = (("traffic_cone", 0.55), ("npc_car", 0.15), ("bicycle", 0.15), ("pedestrian", 0.15))
SLOW_CLASSES = (("npc_car", 0.5), ("bicycle", 0.3), ("pedestrian", 0.2))


class Reject(Exception):
    """A single attempt failed; the sampler retries with fresh draws."""


def _pick(rng, table):
    r = rng.random() * sum(w for _, w in table)
    for item, w in table:
        r -= w
        if r <= 0:
            return item
    return table[-1][0]


def _u1(rng, lo, hi):
    return round(rng.uniform(lo, hi), 1)


def _rate(rng, lo, hi, v, min_dist=1.2):
    # speed changes of slow movers still cover a measurable distance
    return min(_u1(rng, lo, hi), v * v / (2.0 * min_dist))


def extent(cls):
    return DEFAULT_FOOTPRINTS[cls].extent


# ------------------------------------------------------------------ topology

def connector_lanes(topo):
    junction_roads = {r.id for r in topo.roads if r.junction != -1}
    return {lid for lid, ln in topo.lanes.items() if ln.road_id in junction_roads}


def _dedupe(routes):
    seen, out = set(), []
    for r in routes:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def home_routes(topo, goal):
    """Lane sequences (without lane changes) that realize the goal."""
    lanes = topo.lanes
    conn = connector_lanes(topo)
    names = {r.id: r.name for r in topo.roads}

    def name(lid):
        return names[lanes[lid].road_id]

    def plain(ids):
        return [x for x in ids if x not in conn]

    out = []
    if topo.kind in ("straightway", "bend"):
        return [(lid,) for lid, ln in lanes.items() if ln.number < 0]
    if topo.kind == "roundabout":
        for lid, ln in lanes.items():
            if goal == "enter" and lid not in conn and name(lid).startswith("arm") and ln.number < 0:
                for c in ln.successors:
                    r = [lid, c] + lanes[c].successors[:1]
                    out.append(tuple(r))
                    for _ in range(RING_EXTRA):
                        nxt = plain(lanes[r[-1]].successors)
                        if not nxt:
                            break
                        r.append(nxt[0])
                        out.append(tuple(r))
            elif goal == "exit" and lid in conn and name(lid).startswith("exit"):
                r = lanes[lid].predecessors[:1] + [lid] + lanes[lid].successors[:1]
                out.append(tuple(r))
                for _ in range(RING_EXTRA):
                    prv = plain(lanes[r[0]].predecessors)
                    if not prv:
                        break
                    r.insert(0, prv[0])
                    out.append(tuple(r))
        return _dedupe(out)
    prefix = GOAL_CONNECTOR.get(goal)
    for lid, ln in lanes.items():
        if lid in conn or ln.number > 0:
            continue
        for c in ln.successors:
            if prefix and name(c).startswith(prefix):
                out.append((lid, c, lanes[c].successors[0]))
    return _dedupe(out)


def side_lanes(topo, lane_id):
    ln = topo.lanes[lane_id]
    out = []
    if ln.left_neighbor:
        out.append(("left", ln.left_neighbor))
    if ln.right_neighbor:
        out.append(("right", ln.right_neighbor))
    return out


def walk(topo, lane_id, s, distance):
    """Pieces travelled along straightest successors; LookupError at a dead end."""
    return advance(topo, lane_id, s, distance, lambda ln: straightest_successor(topo, ln))


def room_ahead(topo, lane_id, s, cap=400.0):
    total = topo.lanes[lane_id].length - s
    ln = topo.lanes[lane_id]
    while total < cap:
        nxt = straightest_successor(topo, ln)
        if nxt is None:
            break
        ln = topo.lanes[nxt]
        total += ln.length
    return min(total, cap)


def cross_station(topo, src, s, dst):
    """Station on lane dst at the cross-section of station s on src (same road)."""
    return station_at_frac(topo.lanes[dst], frac_index(topo.lanes[src], s))


# ------------------------------------------------------------------ profiles

@dataclass
class Motion:
    """Start-stop movement: optional wait, speed up, cruise, brake to rest."""
    v: float
    a: float
    b: float
    dist: float
    delay: float = 0.0

    @property
    def d_acc(self):
        return self.v * self.v / (2 * self.a)

    @property
    def d_dec(self):
        return self.v * self.v / (2 * self.b)

    @property
    def cruise(self):
        return self.dist - self.d_acc - self.d_dec

    def x(self, t):
        """Distance covered at times t (vectorized)."""
        tau = np.maximum(np.asarray(t, dtype=float) - self.delay, 0.0)
        t1 = self.v / self.a
        t2 = t1 + max(self.cruise, 0.0) / self.v
        t3 = t2 + self.v / self.b
        out = np.where(tau < t1, 0.5 * self.a * tau ** 2, self.d_acc + self.v * (tau - t1))
        late = tau >= t2
        tb = np.minimum(tau, t3) - t2
        out = np.where(late, self.d_acc + self.cruise + self.v * tb - 0.5 * self.b * tb ** 2, out)
        return np.minimum(out, self.dist)

    @property
    def t_end(self):
        return self.delay + self.v / self.a + max(self.cruise, 0.0) / self.v + self.v / self.b

    def instructions(self):
        ins = []
        if self.delay > 0:
            ins.append(Stop(duration=self.delay))
        ins.append(Cruise(self.d_acc, 0.0, self.a))
        if self.cruise > 1e-9:
            ins.append(Cruise(self.cruise, self.v, 0.0))
        ins.append(Cruise(self.d_dec, self.v, -self.b))
        ins.append(Stop(permanent=True))
        return tuple(ins)


@dataclass
class HomeRoute:
    topo: object
    lanes: tuple
    s0: float
    conn: set

    def __post_init__(self):
        off, acc = [], -self.s0
        for lid in self.lanes:
            off.append(acc)
            acc += self.topo.lanes[lid].length
        self.offsets = off
        self.x_max = acc

    def length(self, k):
        return self.topo.lanes[self.lanes[k]].length

    def locate(self, x):
        for k in range(len(self.lanes)):
            if x <= self.offsets[k] + self.length(k) or k == len(self.lanes) - 1:
                return k, x - self.offsets[k]
        raise AssertionError("unreachable")

    def is_zone(self, k):
        return self.lanes[k] not in self.conn

    def safe_knot(self, x):
        k, s = self.locate(x)
        return self.is_zone(k) and END_MARGIN <= s <= self.length(k) - END_MARGIN

    def x_of(self, k, s):
        return self.offsets[k] + s


@dataclass
class Maneuver:
    k: int  # home-route lane index
    side: str
    lane: str  # side lane id
    x: float  # home-path x where the change out begins
    d1: float
    stint: float
    d2: float
    members: list = field(default_factory=list)  # (obstacle index, class)
    motion: Motion | None = None  # shared by in-lane movers; None for statics

    @property
    def need(self):
        return self.d1 + self.stint + self.d2


@dataclass
class Convoy:
    kind: str  # "yield" or "overtake"
    lane: str
    motion: Motion
    members: list  # (obstacle index, class, start station on lane)
    block_until: float = math.inf  # home x after which the ego may use the lane
    path_lanes: set = field(default_factory=set)
    finals: list = field(default_factory=list)  # (lane, station) per member


@dataclass
class Design:
    goal: str
    route: HomeRoute
    ego: Motion
    maneuvers: list
    convoys: list
    classes: dict  # obstacle index -> class

    def ego_program(self):
        r = self.route
        topo = r.topo
        hint = []
        for k, lid in enumerate(r.lanes):
            hint.append(lid)
            for m in self.maneuvers:
                if m.k == k:
                    hint += [m.lane, lid]
        back = {"left": "right", "right": "left"}
        v, ins, cur = self.ego.v, [Cruise(self.ego.d_acc, 0.0, self.ego.a)], self.ego.d_acc
        marks = []
        for m in sorted(self.maneuvers, key=lambda m: m.x):
            if m.x - cur > 1e-9:
                ins.append(Cruise(m.x - cur, v, 0.0))
            ins.append(ChangeLane(m.side, m.d1, v, 0.0))
            i_out = len(ins)
            ins.append(Cruise(m.stint, v, 0.0))
            i_stint = len(ins)
            ins.append(ChangeLane(back[m.side], m.d2, v, 0.0))
            marks.append((m, i_out, i_stint))
            cur = m.x + m.need
        tail = self.ego.dist - self.ego.d_dec - cur
        if tail > 1e-9:
            ins.append(Cruise(tail, v, 0.0))
        ins.append(Cruise(self.ego.d_dec, v, -self.ego.b))
        ins.append(Stop(permanent=True))
        p, _ = point_at(topo.lanes[r.lanes[0]], r.s0)
        prog = MotionProgram(0, "ego_car", StartPose(float(p[0]), float(p[1]), r.lanes[0]), tuple(ins), tuple(hint))
        return prog, marks

    def convoy_programs(self):
        topo = self.route.topo
        out = []
        for c in self.convoys:
            ins = c.motion.instructions()
            for idx, cls, s in c.members:
                p, _ = point_at(topo.lanes[c.lane], s)
                out.append(MotionProgram(idx, cls, StartPose(float(p[0]), float(p[1]), c.lane), ins, (c.lane,)))
        return out


# -------------------------------------------------------------------- design

def _slow_motion(rng, cls_list, v_ego, spread):
    cap = min(min(SPEED_CAP[c] for c in cls_list), v_ego - 3.0)
    if cap < 0.5:
        raise Reject("ego too slow to overtake")
    vo = _u1(rng, 0.5, cap)
    mo = Motion(vo, _rate(rng, 0.5, 2.0, vo), _rate(rng, 0.5, 2.0, vo), 0.0, delay=_u1(rng, 0.0, 3.0))
    mo.dist = round(mo.d_acc + mo.d_dec + 1.0 + rng.uniform(0.0, spread), 1)
    return mo


def _split_clusters(rng, members):
    out, i = [], 0
    while i < len(members):
        hi = min(3, len(members) - i)
        n = hi if rng.random() < 0.6 else rng.randint(1, hi)
        out.append(members[i:i + n])
        i += n
    return out


def _stint(classes):
    return sum(extent(c) for c in classes) + 3.0 * (len(classes) - 1) + EGO_EXTENT + 3.0


def _final_stop(topo, lane, s, dist, conn):
    pieces = walk(topo, lane, s, dist)
    lid, _, s_end = pieces[-1]
    ok = lid not in conn and END_MARGIN <= s_end <= topo.lanes[lid].length - END_MARGIN
    return ok, lid, s_end, {p[0] for p in pieces}


def design_scene(rng, topo, goal, types, routes=None, conn=None):
    """Draw one candidate design; raises Reject when the draw does not fit."""
    conn = connector_lanes(topo) if conn is None else conn
    routes = routes if routes is not None else home_routes(topo, goal)
    if not routes:
        raise Reject(f"no route realizes goal {goal} on {topo.ref}")
    lanes = routes[rng.randrange(len(routes))]
    n = len(types)
    order = list(range(1, n + 1))
    yields = [i for i in order if types[i - 1] == "yield"]
    overtakes = [i for i in order if types[i - 1] == "overtake"]
    bypasses = [i for i in order if types[i - 1] == "bypass"]
    classes = {i: "npc_car" for i in yields}
    if overtakes:
        for i in overtakes:
            classes[i] = _pick(rng, SLOW_CLASSES)
    for i in bypasses:
        classes[i] = _pick(rng, STATIC_CLASSES)

    # ego start leaves room for a yield convoy behind it
    clear_y = (EGO_EXTENT + extent("npc_car")) / 2
    behind = 0.0
    if yields:
        behind = clear_y + 2.0 + (len(yields) - 1) * (extent("npc_car") + CONVOY_GAP) + extent("npc_car") / 2 + 2.0
    s0 = round(max(behind, END_MARGIN) + rng.uniform(0.0, 8.0), 1)
    if s0 > topo.lanes[lanes[0]].length - END_MARGIN:
        raise Reject("start lane too short")
    route = HomeRoute(topo, lanes, s0, conn)

    lo_v, hi_v = EGO_SPEED.get(topo.kind, (7.0, 13.0))
    v = _u1(rng, lo_v - 1.0, hi_v - 4.0) if yields else _u1(rng, lo_v, hi_v)
    ego = Motion(v, _u1(rng, 1.5, 3.0), _u1(rng, 1.5, 3.0), 0.0)
    x_end = route.x_max - END_MARGIN - rng.uniform(0.0, 12.0)
    convoys = []

    # yield convoy: faster cars starting behind the ego
    if yields:
        sides = side_lanes(topo, lanes[0])
        if not sides:
            raise Reject("start lane has no side lane for a yield convoy")
        _, B = sides[rng.randrange(len(sides))]
        vo = _u1(rng, v + 3.0, 15.0)
        mo = Motion(vo, _u1(rng, 2.0, 3.5), _u1(rng, 2.0, 3.0), 0.0, delay=_u1(rng, 0.0, 1.0))
        gap = extent("npc_car") + CONVOY_GAP
        xs = [-(clear_y + 2.0) - j * gap for j in range(len(yields))]
        members = [(i, "npc_car", cross_station(topo, lanes[0], s0 + x, B)) for i, x in zip(yields, xs)]
        dist = room_ahead(topo, B, members[0][2]) - END_MARGIN
        for _ in range(40):
            if dist < mo.d_acc + mo.d_dec + 1.0:
                raise Reject("no room for the yield convoy")
            mo.dist = round(dist, 1)
            checks = [_final_stop(topo, B, s, mo.dist, conn) for _, _, s in members]
            if all(c[0] for c in checks):
                break
            dist -= 5.0
        else:
            raise Reject("yield convoy cannot stop clear of junctions")
        # the rear car must be past the ego before the ego leaves the start lane
        t = np.arange(0.0, 120.0, 0.1)
        ego_try = Motion(v, ego.a, ego.b, max(x_end, ego.d_acc + ego.d_dec + 1.0))
        xe = ego_try.x(t)
        xo = xs[-1] + mo.x(t)
        ahead = np.flatnonzero(xo - xe >= clear_y + 1.0)
        if not len(ahead):
            raise Reject("yield convoy never passes the ego")
        x_pass = float(xe[ahead[0]])
        if x_pass > route.x_of(0, route.length(0)) - 8.0:
            raise Reject("yield convoy passes too late")
        cv = Convoy("yield", B, mo, members, block_until=x_pass + 10.0)
        for ok, lid, s_end, path in checks:
            cv.path_lanes |= path
            cv.finals.append((lid, s_end))
        # the ego must stay behind cars parked on its own roads
        for lid, s_end in cv.finals:
            road = topo.lanes[lid].road_id
            for k, h in enumerate(lanes):
                if topo.lanes[h].road_id == road:
                    s_h = station_at_frac(topo.lanes[h], frac_index(topo.lanes[lid], s_end))
                    x_end = min(x_end, route.x_of(k, s_h) - clear_y - EGO_EXTENT - 3.0)
        convoys.append(cv)

    for _ in range(8):
        ego.dist = round(x_end, 1)
        if ego.cruise >= 1.0 and all(route.safe_knot(x) for x in (ego.d_acc, ego.dist - ego.d_dec, ego.dist)):
            break
        # redraw the braking and the stop point before giving up
        ego.b = _u1(rng, 1.5, 3.0)
        x_end -= rng.uniform(0.0, 6.0)
    else:
        raise Reject("ego speed-change point falls in a junction or near a lane end")
    if ego.dist <= ego.d_acc + ego.d_dec + 1.0:
        raise Reject("ego path too short")
    yield_lanes = set().union(*(c.path_lanes for c in convoys)) if convoys else set()

    # overtake convoy in a side lane; otherwise the movers share the ego lane
    cands = [(k, side, nb) for k, lid in enumerate(lanes) if route.is_zone(k)
             for side, nb in side_lanes(topo, lid) if nb not in yield_lanes]
    in_lane = []
    if overtakes and (not cands or rng.random() < 0.5):
        in_lane, overtakes = overtakes, []
    if overtakes:
        k, _, B = cands[rng.randrange(len(cands))]
        cls_list = [classes[i] for i in overtakes]
        mo = _slow_motion(rng, cls_list, v, 12.0)
        gaps = [(extent(a) + extent(b)) / 2 + CONVOY_GAP for a, b in zip(cls_list, cls_list[1:])]
        span = sum(gaps)
        clear_last = (EGO_EXTENT + extent(cls_list[-1])) / 2
        lo = max(12.0, route.x_of(k, END_MARGIN + 2.0))
        hi = min(route.x_of(k, route.length(k) - END_MARGIN), ego.dist - clear_last - 3.0) - span - mo.dist
        if hi < lo:
            raise Reject("no room for the overtake convoy")
        c0 = rng.uniform(lo, hi)
        xs = [c0] + list(c0 + np.cumsum(gaps))
        members = [(i, c, cross_station(topo, lanes[k], x - route.offsets[k], B))
                   for i, c, x in zip(overtakes, cls_list, xs)]
        cv = Convoy("overtake", B, mo, members, block_until=xs[-1] + mo.dist + clear_last + 5.0)
        for _, _, s in members:
            ok, lid, s_end, path = _final_stop(topo, B, s, mo.dist, conn)
            if not ok:
                raise Reject("overtake convoy stops in a junction")
            cv.path_lanes |= path
            cv.finals.append((lid, s_end))
        convoys.append(cv)

    # lane-change manoeuvres around statics or in-lane movers
    groups = [(g, None) for g in _split_clusters(rng, bypasses)]
    groups += [(g, _slow_motion(rng, [classes[i] for i in g], v, 6.0)) for g in _split_clusters(rng, in_lane)]
    rng.shuffle(groups)
    maneuvers = []
    cursor = ego.d_acc + 1.0
    limit = ego.dist - ego.d_dec - 1.0
    for group, gm in groups:
        cls_list = [classes[i] for i in group]
        st = round(_stint(cls_list) + (gm.dist if gm else 0.0) + rng.uniform(0.0, 4.0), 1)
        d1 = _u1(rng, max(10.0, 1.4 * v), max(16.0, 2.2 * v))
        d2 = _u1(rng, max(10.0, 1.4 * v), max(16.0, 2.2 * v))
        need = d1 + st + d2
        placed = None
        for k in range(len(lanes)):
            if not route.is_zone(k) or route.x_of(k, route.length(k)) < cursor:
                continue
            lo_k = max(cursor, route.x_of(k, END_MARGIN))
            hi_k = min(route.x_of(k, route.length(k) - END_MARGIN), limit)
            sides = side_lanes(topo, lanes[k])
            rng.shuffle(sides)
            for side, nb in sides:
                lo, hi = lo_k, hi_k
                for c in convoys:
                    if nb == c.lane or nb in c.path_lanes:
                        lo = max(lo, c.block_until)
                    # finish the manoeuvre short of cars parked in the side lane
                    for lid, s_end in c.finals:
                        if lid == nb:
                            s_h = station_at_frac(topo.lanes[lanes[k]], frac_index(topo.lanes[nb], s_end))
                            hi = min(hi, route.x_of(k, s_h) - EGO_EXTENT - extent("npc_car") / 2 - 4.0)
                if lo + need <= hi:
                    slack = hi - lo - need
                    x = round(lo + rng.uniform(0.0, min(slack, 15.0)), 1)
                    placed = Maneuver(k, side, nb, x, d1, st, d2, [(i, c) for i, c in zip(group, cls_list)], gm)
                    break
            if placed:
                break
        if placed is None:
            raise Reject("no room for a bypass manoeuvre")
        maneuvers.append(placed)
        cursor = placed.x + need + 2.0
    return Design(goal, route, ego, maneuvers, convoys, classes)


def place_lane_objects(design, ego_traj, marks):
    """Programs for the ego-lane objects passed during each side-lane stint."""
    topo = design.route.topo
    knots = ego_traj.knots
    out = []
    for m, i_out, i_stint in marks:
        home = topo.lanes[design.route.lanes[m.k]]
        s1, _, _ = project(home, knots[i_out][1:3])
        s2, _, _ = project(home, knots[i_stint][1:3])
        cls_list = [c for _, c in m.members]
        lo = s1 + extent(cls_list[0]) / 2 + 0.5
        hi = s2 - EGO_EXTENT / 2 - extent(cls_list[-1]) / 2 - 0.5 - (m.motion.dist if m.motion else 0.0)
        spacing = [(extent(a) + extent(b)) / 2 + 3.0 for a, b in zip(cls_list, cls_list[1:])]
        room = hi - lo - sum(spacing)
        if room < 0:
            raise Reject("stint too short for its objects")
        s = lo + 0.5 * room  # centred in the free part of the stint
        for j, (idx, cls) in enumerate(m.members):
            if j:
                s += spacing[j - 1]
            p, _ = point_at(home, s)
            ins = m.motion.instructions() if m.motion else (Stop(permanent=True),)
            out.append(MotionProgram(idx, cls, StartPose(float(p[0]), float(p[1]), home.lane_id), ins,
                                     (home.lane_id,)))
    return out

