"""Compile scene scripts into motion programs.

Each object's lane state is tracked exactly as the simulator will evolve
it, so the quantized instruction distances never accumulate drift: every
segment distance is measured from where the simulated object actually is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CompileError, ImpossibleMotionError, TopologyError
from .motion import ChangeLane, Cruise, MotionProgram, StartPose, Stop
from .paths import EPS, advance, blend_length, frac_index, solve_blend_end, station_at_frac, straightest_successor
from .road.frenet import project

DISTANCE_QUANTUM = 0.1
LANE_SLACK = 0.25  # extra lateral tolerance beyond half a lane width
CANDIDATE_WINDOW = 0.25
MAX_HOPS = 12


def quantize(d, quantum=DISTANCE_QUANTUM):
    if not quantum:
        return float(d)
    return round(round(d / quantum) * quantum, 10)


@dataclass
class _State:
    route: list
    s: float

    @property
    def lane(self):
        return self.route[-1]


def lane_hits(topo, p, max_l=None):
    """Lanes whose centerline lies within max_l (default half width + slack) of p."""
    out = []
    for ln in topo.lanes_near(p):
        s, l, _ = project(ln, p)
        lim = ln.width / 2 + LANE_SLACK if max_l is None else max_l
        if abs(l) <= lim:
            out.append((abs(l), ln.lane_id, s))
    out.sort()
    return out


def _cruise_candidates(topo, lane_id, s, p):
    """Forward lane paths from (lane_id, s) whose lanes pass near p."""
    out = []
    # (lane, distance to its start, path)
    frontier = [(lane_id, -s, (lane_id,))]
    best_seen = {}
    while frontier:
        cur, offset, path = frontier.pop(0)
        ln = topo.lanes[cur]
        x0, y0, x1, y1 = ln.bbox
        if x0 <= p[0] <= x1 and y0 <= p[1] <= y1:
            sp, l, _ = project(ln, p)
            if abs(l) <= ln.width / 2 + LANE_SLACK:
                dist = offset + sp
                if dist > EPS:
                    out.append((abs(l), dist, len(path), "cruise", path))
        if len(path) > MAX_HOPS:
            continue
        end = offset + ln.length
        for nxt in ln.successors:
            if best_seen.get(nxt, math.inf) <= end:
                continue
            best_seen[nxt] = end
            frontier.append((nxt, end, path + (nxt,)))
    return out


def _behind(topo, lane_id, s, p):
    ln = topo.lanes[lane_id]
    sp, l, _ = project(ln, p)
    return abs(l) <= ln.width / 2 + LANE_SLACK and sp <= s + EPS


def _change_candidates(topo, lane_id, s, p):
    out = []
    bases = [(lane_id, s, ())]
    ln = topo.lanes[lane_id]
    if s >= ln.length - EPS:
        bases += [(nxt, 0.0, (nxt,)) for nxt in ln.successors]
    for base, bs, hop in bases:
        src = topo.lanes[base]
        f_a = frac_index(src, bs)
        for direction, nb in (("left", src.left_neighbor), ("right", src.right_neighbor)):
            if nb is None:
                continue
            tgt = topo.lanes[nb]
            sp, l, _ = project(tgt, p)
            if abs(l) > tgt.width / 2 + LANE_SLACK:
                continue
            f_b = frac_index(tgt, sp)
            if f_b <= f_a + 1e-9:
                continue
            out.append((abs(l), blend_length(src, tgt, f_a, f_b), len(hop), "change", (direction, base, nb, f_a, hop)))
    return out


def _pick(cands):
    lo = min(c[0] for c in cands)
    near = [c for c in cands if c[0] <= lo + CANDIDATE_WINDOW]
    return min(near, key=lambda c: (c[1], c[2]))


def _compile_object(obj, wps, topo, start_lane, quantum):
    p0 = np.array([wps[0].x, wps[0].y])
    s0, _, _ = project(topo.lanes[start_lane], p0)
    st = _State([start_lane], s0)
    ins = []
    if len(wps) > 1 and wps[0].duration > 0:
        ins.append(Stop(duration=float(wps[0].duration)))
    for k in range(1, len(wps)):
        v0, v1 = float(wps[k - 1].v), float(wps[k].v)
        if v0 == 0 and v1 == 0:
            raise ImpossibleMotionError(
                f"object {obj.index}: segment {k - 1}->{k} has zero speed at both ends and cannot move")
        p = np.array([wps[k].x, wps[k].y])
        cands = _cruise_candidates(topo, st.lane, st.s, p) + _change_candidates(topo, st.lane, st.s, p)
        if not cands:
            if _behind(topo, st.lane, st.s, p):
                raise ImpossibleMotionError(
                    f"object {obj.index}: waypoint {k} lies behind waypoint {k - 1}; motion would reverse")
            raise TopologyError(
                f"object {obj.index}: waypoints {k - 1} and {k} resolve to lanes with no successor or neighbor relation")
        best = _pick(cands)
        kind = best[3]
        d = quantize(best[1], quantum)
        if d <= 0:
            raise ImpossibleMotionError(f"object {obj.index}: segment {k - 1}->{k} has zero length")
        a = (v1 * v1 - v0 * v0) / (2.0 * d)
        if kind == "cruise":
            it = iter(best[4][1:])
            try:
                pieces = advance(topo, st.lane, st.s, d,
                                 lambda lane: next(it, None) or straightest_successor(topo, lane))
            except LookupError as exc:
                raise TopologyError(f"object {obj.index}: segment {k - 1}->{k} runs off the lane graph ({exc})") from None
            for lid, _, _ in pieces[1:]:
                st.route.append(lid)
            st.s = pieces[-1][2]
            ins.append(Cruise(d, v0, a))
        else:
            direction, base, nb, f_a, hop = best[4]
            st.route.extend(hop)
            src, tgt = topo.lanes[base], topo.lanes[nb]
            f_b = solve_blend_end(src, tgt, f_a, d)
            if f_b is None:
                raise TopologyError(f"object {obj.index}: lane change {k - 1}->{k} runs past the end of {base}")
            st.route.append(nb)
            st.s = station_at_frac(tgt, f_b)
            ins.append(ChangeLane(direction, d, v0, a))
        if k < len(wps) - 1 and v1 == 0:
            ins.append(Stop(duration=float(wps[k].duration)))
    ins.append(Stop(permanent=True))
    return MotionProgram(obj.index, obj.cls, StartPose(float(wps[0].x), float(wps[0].y), start_lane),
                         tuple(ins), tuple(st.route))


def start_lanes(topo, p):
    hits = lane_hits(topo, p)
    if not hits:
        hits = lane_hits(topo, p, max_l=2.0 * topo.lane_width)
    if not hits:
        return []
    lo = hits[0][0]
    return [lid for l, lid, _ in hits if l <= lo + CANDIDATE_WINDOW]


def compile_object(obj, wps, topo, quantum=DISTANCE_QUANTUM):
    p0 = (wps[0].x, wps[0].y)
    lanes = start_lanes(topo, p0)
    if not lanes:
        raise TopologyError(f"object {obj.index}: first waypoint is not on any lane")
    err = None
    for lane in lanes:
        try:
            return _compile_object(obj, wps, topo, lane, quantum)
        except CompileError as exc:
            err = err or exc
    raise err


def compile_script(script, topo, quantum=DISTANCE_QUANTUM):
    """Compile every object's waypoints into a MotionProgram (ordered by index)."""
    progs = []
    for obj in sorted(script.objects, key=lambda o: o.index):
        wps = script.trajectories.get(obj.index)
        if not wps:
            raise CompileError(f"object {obj.index} has no waypoints")
        progs.append(compile_object(obj, wps, topo, quantum))
    return progs
