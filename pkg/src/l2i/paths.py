"""Lane-path primitives shared by the compiler and the simulator.

Both sides must agree bit-for-bit on where an instruction ends, so every
station update goes through these functions.
"""

from __future__ import annotations

import math

import numpy as np

BLEND_SAMPLES = 100
EPS = 1e-9


def frac_index(lane, s):
    """Fractional polyline index of station s (shared cross-section coordinate)."""
    n = len(lane.seg_len)
    if s >= lane.length:
        return float(n)
    if s <= 0.0:
        return 0.0
    k = int(np.searchsorted(lane.cum, s, side="right") - 1)
    k = min(max(k, 0), n - 1)
    return k + (s - lane.cum[k]) / lane.seg_len[k]


def station_at_frac(lane, f):
    n = len(lane.seg_len)
    if f >= n:
        return lane.length
    k = int(math.floor(f))
    return float(lane.cum[k] + (f - k) * lane.seg_len[k])


def points_at_frac(lane, f):
    f = np.asarray(f, dtype=float)
    n = len(lane.seg_len)
    k = np.clip(np.floor(f).astype(int), 0, n - 1)
    t = (f - k)[:, None]
    pts = lane.centerline
    return pts[k] * (1.0 - t) + pts[k + 1] * t


def smoothstep(u):
    return u * u * (3.0 - 2.0 * u)


def blend_points(src, tgt, f_a, f_b):
    u = np.linspace(0.0, 1.0, BLEND_SAMPLES + 1)
    f = f_a + (f_b - f_a) * u
    w = smoothstep(u)[:, None]
    return points_at_frac(src, f) * (1.0 - w) + points_at_frac(tgt, f) * w


def polyline_length(pts):
    d = np.diff(pts, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def blend_length(src, tgt, f_a, f_b):
    return polyline_length(blend_points(src, tgt, f_a, f_b))


def solve_blend_end(src, tgt, f_a, distance):
    """Cross-section f_b where the blended path from f_a has the given length.

    Returns None when the lane ends first. The length is close to linear
    in f_b, so a safeguarded secant iteration started from the plain
    along-lane estimate converges in a few steps.
    """
    hi = float(len(src.seg_len))
    g_hi = blend_length(src, tgt, f_a, hi) - distance
    if g_hi < -EPS:
        return None
    lo = f_a

    def g(f):
        return blend_length(src, tgt, f_a, f) - distance

    x0 = min(frac_index(src, station_at_frac(src, f_a) + distance), hi)
    x1 = min(x0 + 1e-3 * (hi - f_a), hi)
    g0, g1 = g(x0), g(x1)
    for _ in range(60):
        for x, gx in ((x0, g0), (x1, g1)):
            if gx < 0:
                lo = max(lo, x)
            else:
                hi = min(hi, x)
        if abs(g1) <= 1e-10 or hi - lo <= 1e-13:
            return x1
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0) if g1 != g0 else 0.5 * (lo + hi)
        if not lo < x2 < hi:
            x2 = 0.5 * (lo + hi)
        x0, g0, x1, g1 = x1, g1, x2, g(x2)
    return x1


def straightest_successor(topo, lane):
    if not lane.successors:
        return None
    end_h = lane.seg_hdg[-1]
    best = None
    for nxt in lane.successors:
        h = topo.lanes[nxt].seg_hdg[0]
        # the heading change over the first stretch of the successor decides
        nl = topo.lanes[nxt]
        k = min(len(nl.seg_hdg) - 1, 20)
        turn = abs(math.remainder(nl.seg_hdg[k] - end_h, 2 * math.pi)) + abs(math.remainder(h - end_h, 2 * math.pi))
        if best is None or turn < best[0] - 1e-12:
            best = (turn, nxt)
    return best[1]


def advance(topo, lane_id, s, distance, choose_next):
    """Walk `distance` forward from (lane_id, s).

    `choose_next(lane)` names the lane entered at each lane end. Returns
    the traversed pieces [(lane_id, s_from, s_to), ...]; raises LookupError
    when the lane graph ends.
    """
    pieces = []
    remaining = distance
    while True:
        lane = topo.lanes[lane_id]
        room = lane.length - s
        if remaining <= room + EPS:
            pieces.append((lane_id, s, min(s + remaining, lane.length)))
            return pieces
        pieces.append((lane_id, s, lane.length))
        remaining -= room
        nxt = choose_next(lane)
        if nxt is None or nxt not in lane.successors:
            raise LookupError(f"no successor lane after {lane.lane_id}")
        lane_id, s = nxt, 0.0
