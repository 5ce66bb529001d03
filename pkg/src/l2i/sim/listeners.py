"""Listeners: interaction classification, collisions and off-road events.

Interactions are judged per obstacle against the ego (object 0):

* static obstacle -> bypass: at closest approach the ego is in another
  lane, and its rear then clears the obstacle.
* moving obstacle, similar headings -> following mode: the ego passing
  the obstacle is an overtake, the obstacle passing the ego a yield.
* moving obstacle, crossing headings -> contested-region ordering: the
  ego leaving the shared region before the obstacle enters is an
  overtake, entering only after it left is a yield.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely

from .footprint import corners, overlap

PROXIMITY = 10.0
FOLLOW_HEADING = math.radians(45.0)


@dataclass(frozen=True)
class InteractionEvent:
    obstacle_index: int
    type: str
    ego_pos: tuple
    obstacle_pos: tuple
    t_complete: float


@dataclass(frozen=True)
class SafetyEvent:
    kind: str  # collision, off_road, ambiguous_interaction, missing_interaction
    objects: tuple
    t: float
    position: tuple | None = None


def _pt(a):
    return (float(a[0]), float(a[1]))


def _windows(mask):
    """Contiguous True runs as (start, stop) index pairs."""
    idx = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    return list(zip(idx[::2], idx[1::2]))


def _near_path(points, path, radius):
    """Mask of points lying within radius of the polyline `path`."""
    return shapely.dwithin(shapely.LineString(path), shapely.points(points), radius)


def _ordered_path(xy):
    # drop repeated positions but keep travel order
    keep = np.concatenate([[True], np.any(np.abs(np.diff(xy, axis=0)) > 1e-12, axis=1)])
    return xy[keep]


def _event(j, kind, k, E, O):
    return InteractionEvent(j, kind, _pt(E.xy[k]), _pt(O.xy[k]), float(E.t[k]))


def _bypass(E, O, fe, fo, dist, windows):
    clear = (fe.extent + fo.extent) / 2
    h = np.stack([np.cos(E.heading), np.sin(E.heading)], axis=1)
    rel = np.einsum("ij,ij->i", E.xy - O.xy, h)
    found = []
    for a, b in windows:
        k_min = a + int(np.argmin(dist[a:b]))
        if E.lane[k_min] == O.lane[k_min]:
            continue
        behind = False
        for k in range(a, len(E.t)):
            if k >= b and dist[k] > PROXIMITY:
                break
            if rel[k] < 0:
                behind = True
            elif behind and rel[k] >= clear:
                if dist[k] <= PROXIMITY:
                    found.append(("bypass", k))
                break
    return found


def _following(E, O, fe, fo, dist, windows):
    clear = (fe.extent + fo.extent) / 2
    h = np.stack([np.cos(E.heading), np.sin(E.heading)], axis=1)
    rel = np.einsum("ij,ij->i", E.xy - O.xy, h)
    found = []
    for a, b in windows:
        state = 0  # -1 ego behind, +1 ego ahead
        for k in range(a, b):
            r = rel[k]
            if state == 0:
                state = -1 if r < 0 else 1
                continue
            if state == -1 and r >= clear:
                found.append(("overtake", k))
                state = 1
            elif state == 1 and r <= -clear:
                found.append(("yield", k))
                state = -1
    return found


def _crossing(E, O, dist, lane_width):
    pe, po = _ordered_path(E.xy), _ordered_path(O.xy)
    if len(pe) < 2 or len(po) < 2:
        return []
    e_in = _near_path(E.xy, po, lane_width / 2)
    o_in = _near_path(O.xy, pe, lane_width / 2)
    # only the moving part of each trajectory claims the region
    e_in &= _moving_mask(E)
    o_in &= _moving_mask(O)
    if not e_in.any() or not o_in.any():
        return []
    e_ticks, o_ticks = np.flatnonzero(e_in), np.flatnonzero(o_in)
    if e_ticks[-1] < o_ticks[0]:
        kind, k = "overtake", e_ticks[-1] + 1
    elif o_ticks[-1] < e_ticks[0]:
        kind, k = "yield", o_ticks[-1] + 1
    else:
        return []
    k = min(k, len(E.t) - 1)
    if dist[k] > PROXIMITY:
        k = int(np.argmin(dist))
    return [(kind, k)]


def _moving_mask(tr):
    moved = np.concatenate([[False], np.any(np.abs(np.diff(tr.xy, axis=0)) > 1e-12, axis=1)])
    return moved | (tr.speed > 0)


def detect_interactions(trajectories, script, topology=None):
    """Classify ego/obstacle interactions; returns (interactions, safety events)."""
    by = {tr.object_index: tr for tr in trajectories}
    E = by.get(0)
    events, safety = [], []
    if E is None:
        return events, safety
    fe = script.object(0).footprint
    gt = {g.obstacle for g in script.gt_interactions}
    lane_width = topology.lane_width if topology is not None else 3.5
    for obj in sorted(script.obstacles, key=lambda o: o.index):
        j = obj.index
        O = by.get(j)
        if O is None:
            if j in gt:
                safety.append(SafetyEvent("missing_interaction", (0, j), 0.0))
            continue
        dist = np.hypot(*(E.xy - O.xy).T)
        windows = _windows(dist <= PROXIMITY)
        if not windows:
            if j in gt:
                k = int(np.argmin(dist))
                safety.append(SafetyEvent("missing_interaction", (0, j), float(E.t[k]), _pt(O.xy[k])))
            continue
        if not O.moving:
            found = _bypass(E, O, fe, obj.footprint, dist, windows)
        else:
            k_min = int(np.argmin(dist))
            dh = abs(math.remainder(float(E.heading[k_min] - O.heading[k_min]), 2 * math.pi))
            if dh < FOLLOW_HEADING:
                found = _following(E, O, fe, obj.footprint, dist, windows)
            else:
                found = _crossing(E, O, dist, lane_width)
        if len(found) == 1:
            kind, k = found[0]
            events.append(_event(j, kind, k, E, O))
        elif found:
            k = found[0][1]
            safety.append(SafetyEvent("ambiguous_interaction", (0, j), float(E.t[k]), _pt(O.xy[k])))
    return events, safety


def check_collision(trajectories, footprints):
    """First overlapping tick for every object pair."""
    out = []
    trs = sorted(trajectories, key=lambda tr: tr.object_index)
    for ia in range(len(trs)):
        for ib in range(ia + 1, len(trs)):
            A, B = trs[ia], trs[ib]
            fa, fb = footprints[A.object_index], footprints[B.object_index]
            d = np.hypot(*(A.xy - B.xy).T)
            for k in np.flatnonzero(d <= fa.bound_radius + fb.bound_radius):
                if overlap(fa, A.xy[k], A.heading[k], fb, B.xy[k], B.heading[k]):
                    mid = 0.5 * (A.xy[k] + B.xy[k])
                    out.append(SafetyEvent("collision", (A.object_index, B.object_index), float(A.t[k]), _pt(mid)))
                    break
    return out


def _area(topology):
    area = getattr(topology, "_prepared_area", None)
    if area is None:
        area = topology.drivable_boundary
        shapely.prepare(area)
        topology._prepared_area = area
    return area


def check_off_road(trajectories, footprints, topology):
    """First tick at which any footprint corner leaves the drivable area."""
    area = _area(topology)
    out = []
    for tr in sorted(trajectories, key=lambda tr: tr.object_index):
        pts = corners(footprints[tr.object_index], tr.xy, tr.heading)
        inside = shapely.contains_xy(area, pts[..., 0], pts[..., 1]).all(axis=1)
        bad = np.flatnonzero(~inside)
        if len(bad):
            k = int(bad[0])
            out.append(SafetyEvent("off_road", (tr.object_index,), float(tr.t[k]), _pt(tr.xy[k])))
    return out


def listen(trajectories, script, topology):
    """All listeners at once: (interactions, safety events)."""
    fps = {o.index: o.footprint for o in script.objects}
    events, safety = detect_interactions(trajectories, script, topology)
    safety = check_collision(trajectories, fps) + check_off_road(trajectories, fps, topology) + safety
    return events, safety
