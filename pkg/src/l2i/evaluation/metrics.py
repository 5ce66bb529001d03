"""Trajectory discrepancy T, interaction distance D and success rate R."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROXIMITY = 10.0
DEFAULT_W = 100


def _xy(tr):
    return np.asarray(tr.xy if hasattr(tr, "xy") else tr, dtype=float)


def path_length(xy) -> float:
    xy = np.asarray(xy, dtype=float)
    if len(xy) < 2:
        return 0.0
    return float(np.hypot(*np.diff(xy, axis=0).T).sum())


def resample(xy, W=DEFAULT_W):
    """W points uniformly spaced in arc length along the polyline xy."""
    if W < 2:
        raise ValueError("W must be at least 2")
    xy = np.asarray(xy, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xy, axis=0).T))]) if len(xy) > 1 else np.zeros(1)
    if cum[-1] <= 0.0:
        return np.repeat(xy[:1], W, axis=0)
    keep = np.concatenate([[True], np.diff(cum) > 0])
    cum, xy = cum[keep], xy[keep]
    s = np.linspace(0.0, cum[-1], W)
    return np.stack([np.interp(s, cum, xy[:, 0]), np.interp(s, cum, xy[:, 1])], axis=1)


def _by_index(trajs):
    if isinstance(trajs, dict):
        return {int(k): _xy(v) for k, v in trajs.items()}
    return {tr.object_index: _xy(tr) for tr in trajs}


@dataclass
class Discrepancy:
    T: float
    ego: float | None
    obstacles: dict = field(default_factory=dict)  # index -> mean squared error
    missing: list = field(default_factory=list)
    extra: list = field(default_factory=list)


def trajectory_discrepancy(gen, gt, W=DEFAULT_W, penalize_missing=True) -> Discrepancy:
    """Mean squared ego error plus obstacle error averaged over obstacles.

    An object absent from `gen` contributes its ground-truth path length
    squared when penalize_missing is set, and is left out otherwise.
    """
    g, h = _by_index(gen), _by_index(gt)
    terms = {}
    missing = []
    for idx, ref in h.items():
        if idx not in g:
            missing.append(idx)
            if penalize_missing:
                terms[idx] = path_length(ref) ** 2
            continue
        a, b = resample(g[idx], W), resample(ref, W)
        terms[idx] = float(np.mean(np.sum((a - b) ** 2, axis=1)))
    ego = terms.get(0)
    obs = {k: v for k, v in terms.items() if k != 0}
    T = (ego or 0.0) + (sum(obs.values()) / len(obs) if obs else 0.0)
    return Discrepancy(T, ego, obs, sorted(missing), sorted(set(g) - set(h)))


def _key(ev):
    if hasattr(ev, "obstacle_index"):
        return ev.obstacle_index, ev.type
    return ev.obstacle, ev.type


@dataclass
class Match:
    obstacle: int
    type: str
    matched: bool
    sq_error: float | None = None
    voided: bool = False
    reason: str = ""


def match_interactions(gen_events, gt_interactions):
    """Pair each GT interaction with the generated event of the same (obstacle, type)."""
    gen = {}
    for ev in gen_events:
        gen.setdefault(_key(ev), ev)
    out = []
    for g in sorted(gt_interactions, key=_key):
        ev = gen.get(_key(g))
        if ev is None:
            other = [e.type for e in gen_events if _key(e)[0] == g.obstacle]
            out.append(Match(g.obstacle, g.type, False, reason=f"generated {other[0]}" if other else "not detected"))
            continue
        if math.dist(ev.ego_pos, ev.obstacle_pos) > PROXIMITY:
            out.append(Match(g.obstacle, g.type, False, reason="completed farther than 10 m apart"))
            continue
        err = math.dist(ev.ego_pos, g.ego_pos) ** 2 + math.dist(ev.obstacle_pos, g.obstacle_pos) ** 2
        out.append(Match(g.obstacle, g.type, True, err))
    return out


def interaction_distance(gen_events, gt_interactions):
    """(D, matched_count); D is None without matches."""
    matches = [m for m in match_interactions(gen_events, gt_interactions) if m.matched]
    if not matches:
        return None, 0
    return float(np.mean([m.sq_error for m in matches])), len(matches)


def _voided(matches, safety_events):
    collisions = [tuple(ev.objects) for ev in safety_events if ev.kind == "collision"]
    ego_hit = any(0 in pair for pair in collisions)
    hit = {i for pair in collisions for i in pair}
    for m in matches:
        if m.matched and (ego_hit or m.obstacle in hit):
            m.voided = True
            m.reason = "ego collision" if ego_hit else "obstacle collision"
    return matches


def success_counts(gen_events, gt_interactions, safety_events=()):
    matches = _voided(match_interactions(gen_events, gt_interactions), safety_events)
    return sum(m.matched and not m.voided for m in matches), len(matches), matches


def success_rate(gen_events, gt_interactions, safety_events=()):
    """Share of GT interactions reproduced; None for an empty GT set."""
    ok, total, _ = success_counts(gen_events, gt_interactions, safety_events)
    return ok / total if total else None
