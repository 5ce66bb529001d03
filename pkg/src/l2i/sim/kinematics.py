"""Tick-based execution of motion programs.

Every instruction is resolved into a path (a polyline with per-segment
lane labels) plus piecewise-uniform-acceleration kinematics; samples at
t = k*dt are evaluated in closed form along that path, so there is no
integration drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SimulationError
from ..motion import ChangeLane, Cruise, Stop, final_speed, instruction_duration
from ..paths import (BLEND_SAMPLES, EPS, advance, blend_points, frac_index, solve_blend_end, station_at_frac,
                     straightest_successor)
from ..road.frenet import point_at, project

HORIZON_PAD = 2.0
DT_DEFAULT = 0.1


@dataclass
class Trajectory:
    object_index: int
    t: np.ndarray
    xy: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    lane: list
    knots: list = field(default_factory=list)  # (t, x, y, speed) at instruction boundaries

    @property
    def samples(self):
        return [{"t": float(self.t[k]), "position": (float(self.xy[k, 0]), float(self.xy[k, 1])),
                 "heading": float(self.heading[k]), "speed": float(self.speed[k]), "lane_id": self.lane[k]}
                for k in range(len(self.t))]

    @property
    def moving(self) -> bool:
        return bool(np.any(self.speed > 0)) or bool(np.any(np.ptp(self.xy, axis=0) > 0))


@dataclass
class _Phase:
    t0: float
    t1: float
    kind: str  # "hold" or "move"
    v0: float = 0.0
    a: float = 0.0
    d: float = 0.0
    pts: np.ndarray | None = None
    cum: np.ndarray | None = None
    hdg: np.ndarray | None = None
    labels: list | None = None
    pose: tuple | None = None  # (x, y, heading, lane) for holds


def _cruise_path(topo, pieces):
    pts, labels = [], []
    for lane_id, s0, s1 in pieces:
        ln = topo.lanes[lane_id]
        if s1 - s0 <= 0:
            continue
        a, _ = point_at(ln, s0)
        b, _ = point_at(ln, s1)
        inner = (ln.cum > s0 + 1e-12) & (ln.cum < s1 - 1e-12)
        seg = np.vstack([a, ln.centerline[inner], b])
        if pts:
            seg = seg[1:] if np.allclose(seg[0], pts[-1][-1], atol=1e-9) else seg
        pts.append(seg)
        labels.extend([lane_id] * len(seg))
    return np.vstack(pts), labels


def _path_arrays(pts):
    d = np.diff(pts, axis=0)
    ln = np.hypot(d[:, 0], d[:, 1])
    keep = np.concatenate([[True], ln > 1e-12])
    pts = pts[keep]
    d = np.diff(pts, axis=0)
    ln = np.hypot(d[:, 0], d[:, 1])
    return pts, np.concatenate([[0.0], np.cumsum(ln)]), np.arctan2(d[:, 1], d[:, 0]), keep


class _Runner:
    def __init__(self, prog, topo):
        self.prog = prog
        self.topo = topo
        self.route = list(prog.route) if prog.route else [prog.start.lane_id]
        if self.route[0] != prog.start.lane_id:
            self.route = [prog.start.lane_id]
        self.i = 0
        lane = topo.lane(prog.start.lane_id)
        self.s, _, _ = project(lane, (prog.start.x, prog.start.y))

    @property
    def lane_id(self):
        return self.route[self.i]

    def choose_next(self, lane):
        if self.i + 1 < len(self.route) and self.route[self.i + 1] in lane.successors:
            self.i += 1
            return self.route[self.i]
        nxt = straightest_successor(self.topo, lane)
        if nxt is None:
            return None
        del self.route[self.i + 1:]
        self.route.append(nxt)
        self.i += 1
        return nxt

    def pose(self):
        ln = self.topo.lanes[self.lane_id]
        p, h = point_at(ln, self.s)
        return float(p[0]), float(p[1]), h, self.lane_id

    def fail(self, k, msg):
        raise SimulationError(f"object {self.prog.object_index}, instruction {k} "
                              f"({self.prog.instructions[k].name}): {msg}")

    def cruise(self, k, ins):
        try:
            pieces = advance(self.topo, self.lane_id, self.s, ins.distance, self.choose_next)
        except LookupError as exc:
            self.fail(k, f"runs off the lane graph ({exc})")
        self.s = pieces[-1][2]
        return _cruise_path(self.topo, pieces)

    def change(self, k, ins):
        ln = self.topo.lanes[self.lane_id]
        if self.s >= ln.length - EPS and ln.successors:
            nxt = self.choose_next(ln)
            self.s = 0.0
            ln = self.topo.lanes[nxt]
        if ins.direction not in ("left", "right"):
            self.fail(k, f"unknown direction {ins.direction!r}")
        nb = ln.left_neighbor if ins.direction == "left" else ln.right_neighbor
        if nb is None:
            self.fail(k, f"no {ins.direction} lane next to {ln.lane_id}")
        tgt = self.topo.lanes[nb]
        f_a = frac_index(ln, self.s)
        f_b = solve_blend_end(ln, tgt, f_a, ins.distance)
        if f_b is None:
            self.fail(k, f"lane change runs past the end of {ln.lane_id}")
        pts = blend_points(ln, tgt, f_a, f_b)
        # the lane id switches at the midpoint of the manoeuvre
        half = BLEND_SAMPLES // 2 + 1
        labels = [ln.lane_id] * half + [nb] * (BLEND_SAMPLES + 1 - half)
        if self.i + 1 < len(self.route) and self.route[self.i + 1] == nb:
            self.i += 1
        else:
            del self.route[self.i + 1:]
            self.route.append(nb)
            self.i += 1
        self.s = station_at_frac(tgt, f_b)
        return pts, labels


def _phases(prog, topo):
    run = _Runner(prog, topo)
    phases = []
    knots = []
    t = 0.0
    x, y, h, lane = run.pose()
    first = prog.instructions[0] if prog.instructions else None
    knots.append((0.0, x, y, 0.0 if first is None or isinstance(first, Stop) else float(first.initial_velocity)))
    for k, ins in enumerate(prog.instructions):
        if isinstance(ins, Stop):
            if ins.permanent:
                break
            dur = float(ins.duration)
            phases.append(_Phase(t, t + dur, "hold", pose=(x, y, h, lane)))
            t += dur
            knots.append((t, x, y, 0.0))
            continue
        if not isinstance(ins, (Cruise, ChangeLane)):
            run.fail(k, "unsupported instruction")
        dur = instruction_duration(ins)
        if not math.isfinite(dur):
            run.fail(k, "instruction never completes (zero speed throughout)")
        if ins.initial_velocity ** 2 + 2 * ins.accelerated_velocity * ins.distance < -1e-9:
            run.fail(k, "speed would become negative")
        pts, labels = run.cruise(k, ins) if isinstance(ins, Cruise) else run.change(k, ins)
        pts, cum, hdg, keep = _path_arrays(pts)
        labels = [lb for lb, kp in zip(labels, keep) if kp]
        phases.append(_Phase(t, t + dur, "move", ins.initial_velocity, ins.accelerated_velocity, ins.distance,
                             pts, cum, hdg, labels))
        t += dur
        # hold at the path end, realigned to the lane tangent
        x, y, h, lane = float(pts[-1, 0]), float(pts[-1, 1]), run.pose()[2], run.lane_id
        knots.append((t, x, y, final_speed(ins.initial_velocity, ins.accelerated_velocity, ins.distance)))
    phases.append(_Phase(t, math.inf, "hold", pose=(x, y, h, lane)))
    return phases, knots, t


def _sample(phases, times, index, knots):
    n = len(times)
    xy = np.empty((n, 2))
    hd = np.empty(n)
    sp = np.zeros(n)
    lanes = [None] * n
    taken = np.zeros(n, dtype=bool)
    for ph in phases:
        # a move owns its closing tick, so the terminal speed is visible there
        if ph.kind == "hold":
            sel = np.flatnonzero((times >= ph.t0) & (times < ph.t1) & ~taken)
        else:
            sel = np.flatnonzero((times >= ph.t0) & (times <= ph.t1))
        taken[sel] = True
        if not len(sel):
            continue
        if ph.kind == "hold":
            x, y, h, lane = ph.pose
            xy[sel] = (x, y)
            hd[sel] = h
            for k in sel:
                lanes[k] = lane
            continue
        tau = times[sel] - ph.t0
        dist = np.clip(ph.v0 * tau + 0.5 * ph.a * tau * tau, 0.0, ph.cum[-1])
        xy[sel, 0] = np.interp(dist, ph.cum, ph.pts[:, 0])
        xy[sel, 1] = np.interp(dist, ph.cum, ph.pts[:, 1])
        seg = np.clip(np.searchsorted(ph.cum, dist, side="right") - 1, 0, len(ph.hdg) - 1)
        hd[sel] = ph.hdg[seg]
        sp[sel] = np.maximum(ph.v0 + ph.a * tau, 0.0)
        for k, g in zip(sel, seg):
            lanes[k] = ph.labels[g + 1]
    return Trajectory(index, times, xy, hd, sp, lanes, knots)


def time_grid(horizon, dt):
    n = int(math.ceil(horizon / dt - 1e-9))
    return np.arange(n + 1) * dt


def simulate(programs, topology, dt=DT_DEFAULT, horizon=None):
    """Simulate all programs on a shared tick grid; returns Trajectory list ordered by index."""
    if not (0 < dt <= 0.5):
        raise SimulationError(f"dt must be in (0, 0.5], got {dt}")
    built = []
    end = 0.0
    for prog in sorted(programs, key=lambda p: p.object_index):
        try:
            phases, knots, t_end = _phases(prog, topology)
        except KeyError as exc:
            raise SimulationError(f"object {prog.object_index}: {exc}") from None
        built.append((prog.object_index, phases, knots))
        end = max(end, t_end)
    if horizon is None:
        horizon = end + HORIZON_PAD
    times = time_grid(horizon, dt)
    return [_sample(ph, times, idx, kn) for idx, ph, kn in built]
