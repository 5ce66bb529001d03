"""Trajectory dump: tab-separated samples followed by typed event records."""

from __future__ import annotations

import numpy as np

from ..errors import FormatVersionError
from .kinematics import Trajectory
from .listeners import InteractionEvent, SafetyEvent

FORMAT = "l2i-traj/1"
COLUMNS = ("t", "object", "x", "y", "heading", "speed", "lane")


def _f(x):
    x = float(x)
    return repr(0.0 if x == 0 else x)


def dump_trajectories(trajectories, interactions=(), safety=()) -> str:
    out = [f"# {FORMAT}", "\t".join(COLUMNS)]
    for tr in sorted(trajectories, key=lambda tr: tr.object_index):
        for k in range(len(tr.t)):
            out.append("\t".join([_f(tr.t[k]), str(tr.object_index), _f(tr.xy[k, 0]), _f(tr.xy[k, 1]),
                                  _f(tr.heading[k]), _f(tr.speed[k]), str(tr.lane[k])]))
    for ev in interactions:
        out.append("\t".join(["@interaction", str(ev.obstacle_index), ev.type, _f(ev.ego_pos[0]), _f(ev.ego_pos[1]),
                              _f(ev.obstacle_pos[0]), _f(ev.obstacle_pos[1]), _f(ev.t_complete)]))
    for ev in safety:
        pos = ev.position or ("", "")
        out.append("\t".join(["@safety", ev.kind, ",".join(map(str, ev.objects)), _f(ev.t),
                              _f(pos[0]) if pos[0] != "" else "", _f(pos[1]) if pos[1] != "" else ""]))
    return "\n".join(out) + "\n"


def load_trajectories(text: str):
    """Inverse of dump_trajectories: (trajectories, interactions, safety)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# {FORMAT}":
        raise FormatVersionError(f"expected header '# {FORMAT}'")
    rows = {}
    inter, safety = [], []
    for raw in lines[2:]:
        if not raw:
            continue
        f = raw.split("\t")
        if f[0] == "@interaction":
            inter.append(InteractionEvent(int(f[1]), f[2], (float(f[3]), float(f[4])),
                                          (float(f[5]), float(f[6])), float(f[7])))
        elif f[0] == "@safety":
            pos = (float(f[4]), float(f[5])) if f[4] else None
            safety.append(SafetyEvent(f[1], tuple(int(x) for x in f[2].split(",") if x), float(f[3]), pos))
        else:
            rows.setdefault(int(f[1]), []).append(f)
    trajs = []
    for idx in sorted(rows):
        r = rows[idx]
        num = np.array([[float(x[0]), float(x[2]), float(x[3]), float(x[4]), float(x[5])] for x in r])
        trajs.append(Trajectory(idx, num[:, 0], num[:, 1:3].copy(), num[:, 3], num[:, 4], [x[6] for x in r]))
    return trajs, inter, safety
