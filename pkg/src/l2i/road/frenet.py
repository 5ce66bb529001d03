"""Lane-relative (Frenet) coordinates on polyline centerlines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OffLaneError, StationRangeError

TIE_EPS = 1e-12


@dataclass(frozen=True)
class FrenetPose:
    lane_id: str
    s: float
    l: float


def project(lane, xy):
    """Closest projection of xy onto the lane centerline.

    Returns (s, l, segment index). Ties between segments go to the lowest s.
    """
    p = np.asarray(xy, dtype=float)
    a = lane.centerline[:-1]
    d = lane.seg_dir
    rel = p - a
    along = rel[:, 0] * d[:, 0] + rel[:, 1] * d[:, 1]
    along = np.clip(along, 0.0, lane.seg_len)
    qx = a[:, 0] + along * d[:, 0]
    qy = a[:, 1] + along * d[:, 1]
    dist2 = (p[0] - qx) ** 2 + (p[1] - qy) ** 2
    best = dist2.min()
    i = int(np.flatnonzero(dist2 <= best + TIE_EPS)[0])
    s = float(lane.cum[i] + along[i])
    ex, ey = p[0] - qx[i], p[1] - qy[i]
    cross = d[i, 0] * ey - d[i, 1] * ex
    mag = float(np.sqrt(dist2[i]))
    l = mag if cross >= 0 else -mag
    return s, l, i


def point_at(lane, s, l=0.0):
    """Position and heading at station s and lateral offset l."""
    if s < -1e-9 or s > lane.length + 1e-9:
        raise StationRangeError(f"station {s:.3f} outside [0, {lane.length:.3f}] on {lane.lane_id}")
    i = int(np.searchsorted(lane.cum, s, side="right") - 1)
    i = min(max(i, 0), len(lane.seg_len) - 1)
    t = s - lane.cum[i]
    d = lane.seg_dir[i]
    a = lane.centerline[i]
    x = a[0] + t * d[0] - l * d[1]
    y = a[1] + t * d[1] + l * d[0]
    return np.array([x, y]), float(lane.seg_hdg[i])


def to_frenet(topology, lane_id, xy) -> FrenetPose:
    lane = topology.lane(lane_id)
    s, l, _ = project(lane, xy)
    if abs(l) > 2.0 * lane.width:
        raise OffLaneError(f"point {tuple(np.round(xy, 3))} is {abs(l):.2f} m off lane {lane_id}")
    return FrenetPose(lane_id, s, l)


def from_frenet(topology, pose: FrenetPose):
    lane = topology.lane(pose.lane_id)
    if abs(pose.l) > 1.5 * lane.width + 1e-9:
        raise OffLaneError(f"lateral offset {pose.l} beyond lane band on {pose.lane_id}")
    return point_at(lane, pose.s, pose.l)
