"""Scene scripts: objects, waypoint trajectories, goal and ground-truth
interactions, with canonical JSON I/O ("l2i-script/1") and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatVersionError, RangeError, SchemaError

FORMAT = "l2i-script/1"
OBJECT_CLASSES = ("ego_car", "npc_car", "pedestrian", "bicycle", "traffic_cone")
GOALS = ("enter", "exit", "straight", "turn_left", "turn_right")
INTERACTION_TYPES = ("bypass", "overtake", "yield")
MAX_APPROACH = 10.0  # meters, short-range interaction bound
MIN_SPACING = 0.5

GOALS_BY_KIND = {
    "straightway": ("straight",),
    "bend": ("straight",),
    "roundabout": ("enter", "exit"),
    "cross": ("straight", "turn_left", "turn_right"),
    "t_shaped": ("straight", "turn_left", "turn_right"),
    "y_shaped": ("turn_left", "turn_right"),
}


@dataclass(frozen=True)
class Footprint:
    shape: str  # "rect" or "disc"
    length: float = 0.0
    width: float = 0.0
    radius: float = 0.0

    @property
    def extent(self) -> float:
        """Size along the travel direction."""
        return self.length if self.shape == "rect" else 2.0 * self.radius

    @property
    def bound_radius(self) -> float:
        if self.shape == "rect":
            return 0.5 * math.hypot(self.length, self.width)
        return self.radius


DEFAULT_FOOTPRINTS = {
    "ego_car": Footprint("rect", 4.5, 2.0),
    "npc_car": Footprint("rect", 4.5, 2.0),
    "bicycle": Footprint("rect", 1.8, 0.6),
    "pedestrian": Footprint("disc", radius=0.3),
    "traffic_cone": Footprint("disc", radius=0.2),
}


@dataclass(frozen=True)
class ObjectSpec:
    index: int
    cls: str
    footprint: Footprint

    @classmethod
    def make(cls, index, klass):
        return cls(index, klass, DEFAULT_FOOTPRINTS[klass])


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    v: float
    duration: float = 0.0
    permanent: bool = False

    @property
    def xy(self):
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class GtInteraction:
    obstacle: int
    type: str
    ego_pos: tuple[float, float]
    obstacle_pos: tuple[float, float]


@dataclass(frozen=True)
class SceneScript:
    topology_ref: str
    goal: str
    objects: tuple[ObjectSpec, ...]
    trajectories: dict = field(default_factory=dict)  # object index -> tuple[Waypoint, ...]
    gt_interactions: tuple[GtInteraction, ...] = ()

    def object(self, index) -> ObjectSpec:
        for o in self.objects:
            if o.index == index:
                return o
        raise KeyError(index)

    @property
    def obstacles(self):
        return [o for o in self.objects if o.index != 0]


# ---------------------------------------------------------------- canonical I/O

def _num(x) -> float:
    v = round(float(x), 1)
    return 0.0 if v == 0 else v


def _dump(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def canonical(script: SceneScript) -> SceneScript:
    """Round every number to the one-decimal file precision."""
    objs = tuple(ObjectSpec(o.index, o.cls, Footprint(o.footprint.shape, _num(o.footprint.length),
                                                      _num(o.footprint.width), _num(o.footprint.radius)))
                 for o in script.objects)
    trajs = {k: tuple(Waypoint(_num(w.x), _num(w.y), _num(w.v), _num(w.duration), bool(w.permanent)) for w in wps)
             for k, wps in script.trajectories.items()}
    gts = tuple(GtInteraction(g.obstacle, g.type, (_num(g.ego_pos[0]), _num(g.ego_pos[1])),
                              (_num(g.obstacle_pos[0]), _num(g.obstacle_pos[1]))) for g in script.gt_interactions)
    return SceneScript(script.topology_ref, script.goal, objs, trajs, gts)


def _footprint_doc(fp: Footprint):
    if fp.shape == "rect":
        return {"shape": "rect", "length": _num(fp.length), "width": _num(fp.width)}
    return {"shape": "disc", "radius": _num(fp.radius)}


def save_script(script: SceneScript) -> bytes:
    lines = ["{", f'  "version": {_dump(FORMAT)},', f'  "topology_ref": {_dump(script.topology_ref)},',
             f'  "goal": {_dump(script.goal)},', '  "objects": [']
    objs = sorted(script.objects, key=lambda o: o.index)
    for i, o in enumerate(objs):
        doc = {"index": o.index, "class": o.cls, "footprint": _footprint_doc(o.footprint)}
        lines.append("    " + _dump(doc) + ("," if i < len(objs) - 1 else ""))
    lines.append("  ],")
    lines.append('  "trajectories": [')
    keys = sorted(script.trajectories)
    for i, k in enumerate(keys):
        lines.append(f'    {{"object": {k}, "waypoints": [')
        wps = script.trajectories[k]
        for j, w in enumerate(wps):
            doc = {"x": _num(w.x), "y": _num(w.y), "v": _num(w.v), "duration": _num(w.duration),
                   "permanent": bool(w.permanent)}
            lines.append("      " + _dump(doc) + ("," if j < len(wps) - 1 else ""))
        lines.append("    ]}" + ("," if i < len(keys) - 1 else ""))
    lines.append("  ],")
    lines.append('  "gt_interactions": [')
    gts = sorted(script.gt_interactions, key=lambda g: g.obstacle)
    for i, g in enumerate(gts):
        doc = {"obstacle": g.obstacle, "type": g.type, "ego_pos": [_num(g.ego_pos[0]), _num(g.ego_pos[1])],
               "obstacle_pos": [_num(g.obstacle_pos[0]), _num(g.obstacle_pos[1])]}
        lines.append("    " + _dump(doc) + ("," if i < len(gts) - 1 else ""))
    lines.append("  ]")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Reader:
    def __init__(self, strict):
        self.strict = strict

    def obj(self, d, path, required, optional=()):
        if not isinstance(d, dict):
            raise SchemaError(path, "expected an object")
        for k in required:
            if k not in d:
                raise SchemaError(f"{path}.{k}" if path else k, "missing required field")
        if self.strict:
            extra = sorted(set(d) - set(required) - set(optional))
            if extra:
                raise SchemaError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
        return d

    def lst(self, d, path):
        if not isinstance(d, list):
            raise SchemaError(path, "expected a list")
        return d

    def number(self, d, path, minimum=None):
        if isinstance(d, bool) or not isinstance(d, (int, float)) or not math.isfinite(d):
            raise SchemaError(path, "expected a finite number")
        if minimum is not None and d < minimum:
            raise RangeError(path, f"value {d} below minimum {minimum} (range error)")
        return float(d)

    def integer(self, d, path, minimum=None):
        if isinstance(d, bool) or not isinstance(d, int):
            raise SchemaError(path, "expected an integer")
        if minimum is not None and d < minimum:
            raise RangeError(path, f"value {d} below minimum {minimum} (range error)")
        return d

    def enum(self, d, path, values):
        if d not in values:
            raise SchemaError(path, f"expected one of {', '.join(values)}, got {d!r}")
        return d

    def point(self, d, path):
        d = self.lst(d, path)
        if len(d) != 2:
            raise SchemaError(path, "expected [x, y]")
        return (self.number(d[0], f"{path}[0]"), self.number(d[1], f"{path}[1]"))


def load_script(data, strict=False) -> SceneScript:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc.msg} at line {exc.lineno}, column {exc.colno}") from None
    r = _Reader(strict)
    r.obj(doc, "", ("version", "topology_ref", "goal", "objects", "trajectories"), ("gt_interactions",))
    if doc["version"] != FORMAT:
        raise FormatVersionError(f"script version {doc['version']!r}, expected {FORMAT!r}")
    if not isinstance(doc["topology_ref"], str):
        raise SchemaError("topology_ref", "expected a string")
    goal = r.enum(doc["goal"], "goal", GOALS)
    objects = []
    for i, o in enumerate(r.lst(doc["objects"], "objects")):
        p = f"objects[{i}]"
        r.obj(o, p, ("index", "class"), ("footprint",))
        klass = r.enum(o["class"], f"{p}.class", OBJECT_CLASSES)
        fp = DEFAULT_FOOTPRINTS[klass]
        if "footprint" in o:
            f = o["footprint"]
            shape = r.enum(r.obj(f, f"{p}.footprint", ("shape",), ("length", "width", "radius"))["shape"],
                           f"{p}.footprint.shape", ("rect", "disc"))
            if shape == "rect":
                r.obj(f, f"{p}.footprint", ("shape", "length", "width"), ())
                fp = Footprint("rect", r.number(f["length"], f"{p}.footprint.length", 0.0),
                               r.number(f["width"], f"{p}.footprint.width", 0.0))
            else:
                r.obj(f, f"{p}.footprint", ("shape", "radius"), ())
                fp = Footprint("disc", radius=r.number(f["radius"], f"{p}.footprint.radius", 0.0))
        objects.append(ObjectSpec(r.integer(o["index"], f"{p}.index", 0), klass, fp))
    trajs = {}
    for i, t in enumerate(r.lst(doc["trajectories"], "trajectories")):
        p = f"trajectories[{i}]"
        r.obj(t, p, ("object", "waypoints"))
        idx = r.integer(t["object"], f"{p}.object", 0)
        if idx in trajs:
            raise SchemaError(f"{p}.object", f"duplicate trajectory for object {idx}")
        wps = []
        for j, w in enumerate(r.lst(t["waypoints"], f"{p}.waypoints")):
            q = f"{p}.waypoints[{j}]"
            r.obj(w, q, ("x", "y", "v"), ("duration", "permanent"))
            perm = w.get("permanent", False)
            if not isinstance(perm, bool):
                raise SchemaError(f"{q}.permanent", "expected a boolean")
            wps.append(Waypoint(r.number(w["x"], f"{q}.x"), r.number(w["y"], f"{q}.y"),
                                r.number(w["v"], f"{q}.v", 0.0),
                                r.number(w.get("duration", 0.0), f"{q}.duration", 0.0), perm))
        trajs[idx] = tuple(wps)
    gts = []
    for i, g in enumerate(r.lst(doc.get("gt_interactions", []), "gt_interactions")):
        p = f"gt_interactions[{i}]"
        r.obj(g, p, ("obstacle", "type", "ego_pos", "obstacle_pos"))
        gts.append(GtInteraction(r.integer(g["obstacle"], f"{p}.obstacle", 0),
                                 r.enum(g["type"], f"{p}.type", INTERACTION_TYPES),
                                 r.point(g["ego_pos"], f"{p}.ego_pos"), r.point(g["obstacle_pos"], f"{p}.obstacle_pos")))
    return SceneScript(doc["topology_ref"], goal, tuple(objects), trajs, tuple(gts))


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    path: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self):
        return [v.code for v in self.violations]


def _seg_seg_dist(p, q):
    """Minimum distance between polylines p (n x 2) and q (m x 2)."""
    best = math.inf
    for poly_a, poly_b in ((p, q), (q, p)):
        # vertices of a against segments of b
        if len(poly_b) == 1:
            d = np.hypot(*(poly_a - poly_b[0]).T)
            best = min(best, float(d.min()))
            continue
        a = poly_b[:-1]
        d = poly_b[1:] - a
        L2 = np.maximum((d ** 2).sum(1), 1e-18)
        for pt in poly_a:
            t = np.clip(((pt - a) * d).sum(1) / L2, 0.0, 1.0)
            proj = a + t[:, None] * d
            best = min(best, float(np.hypot(*(proj - pt).T).min()))
    return best


def validate_script(script: SceneScript, topology=None) -> ValidationReport:
    out = []

    def bad(code, message, path=""):
        out.append(Violation(code, message, path))

    indices = [o.index for o in script.objects]
    seen = set()
    for i, idx in enumerate(indices):
        if idx in seen:
            bad("duplicate_index", f"object index {idx} used more than once", f"objects[{i}].index")
        seen.add(idx)
    classes = {o.index: o.cls for o in script.objects}
    if classes.get(0) != "ego_car":
        bad("ego_index", "object 0 must exist and be the ego car", "objects")
    for o in script.objects:
        if o.cls == "ego_car" and o.index != 0:
            bad("ego_index", f"object {o.index}: only index 0 may be the ego car", "objects")
        if o.cls not in OBJECT_CLASSES:
            bad("object_class", f"object {o.index}: unknown class {o.cls}", "objects")
    n_obs = len([i for i in seen if i != 0])
    if not 1 <= n_obs <= 5:
        bad("obstacle_count", f"scene has {n_obs} obstacles, expected 1 to 5", "objects")
    if script.goal not in GOALS:
        bad("goal", f"unknown goal {script.goal}", "goal")
    if topology is not None:
        if script.topology_ref != topology.ref:
            bad("topology_ref", f"script references {script.topology_ref}, topology is {topology.ref}", "topology_ref")
        allowed = GOALS_BY_KIND.get(topology.kind, GOALS)
        if script.goal not in allowed:
            bad("goal", f"goal {script.goal} not available on {topology.kind}", "goal")

    for idx in sorted(seen):
        if idx not in script.trajectories:
            bad("missing_trajectory", f"object {idx} has no trajectory", "trajectories")
    for idx in sorted(script.trajectories):
        if idx not in seen:
            bad("orphan_trajectory", f"trajectory for unknown object {idx}", "trajectories")

    for idx in sorted(script.trajectories):
        wps = script.trajectories[idx]
        p = f"trajectories[object={idx}]"
        if not wps:
            bad("empty_trajectory", f"object {idx} has no waypoints", p)
            continue
        if classes.get(idx) == "traffic_cone" and len(wps) != 1:
            bad("static_class", f"object {idx}: traffic cones are static and take exactly one waypoint", p)
        if wps[0].v != 0 or wps[-1].v != 0:
            bad("endpoint_velocity", f"object {idx}: first/last velocity must be 0", p)
        for j, w in enumerate(wps):
            q = f"{p}.waypoints[{j}]"
            if w.v < 0 or w.duration < 0:
                bad("range", f"object {idx} waypoint {j}: negative velocity or duration", q)
            if 0 < j < len(wps) - 1 and w.v == 0 and w.duration <= 0:
                bad("stop_duration", f"object {idx} waypoint {j}: zero-velocity middle waypoint needs duration > 0", q)
            if w.v > 0 and w.duration > 0:
                bad("duration_velocity", f"object {idx} waypoint {j}: duration only applies at zero velocity", q)
            if w.permanent and j != len(wps) - 1:
                bad("permanent_stop", f"object {idx} waypoint {j}: permanent stop only on the last waypoint", q)
            if j > 0:
                gap = math.hypot(w.x - wps[j - 1].x, w.y - wps[j - 1].y)
                if gap < MIN_SPACING:
                    bad("waypoint_spacing", f"object {idx} waypoints {j - 1},{j} are {gap:.2f} m apart (< 0.5 m)", q)
        if topology is not None:
            xy = np.array([[w.x, w.y] for w in wps])
            inside = topology.contains(xy)
            for j in np.flatnonzero(~inside):
                bad("off_road", f"object {idx} waypoint {j} lies outside the drivable area", f"{p}.waypoints[{j}]")

    ego = script.trajectories.get(0)
    if ego:
        ego_xy = np.array([[w.x, w.y] for w in ego])
        for idx in sorted(script.trajectories):
            if idx == 0 or not script.trajectories[idx]:
                continue
            obs_xy = np.array([[w.x, w.y] for w in script.trajectories[idx]])
            if _seg_seg_dist(ego_xy, obs_xy) >= MAX_APPROACH:
                bad("no_approach", f"object {idx} never comes within {MAX_APPROACH:.0f} m of the ego path",
                    f"trajectories[object={idx}]")

    gt_seen = set()
    for i, g in enumerate(script.gt_interactions):
        p = f"gt_interactions[{i}]"
        if g.obstacle == 0 or g.obstacle not in seen:
            bad("gt_obstacle", f"interaction references invalid obstacle {g.obstacle}", p)
        if g.obstacle in gt_seen:
            bad("gt_duplicate", f"obstacle {g.obstacle} has more than one interaction", p)
        gt_seen.add(g.obstacle)
        if g.type not in INTERACTION_TYPES:
            bad("gt_type", f"unknown interaction type {g.type}", p)
        if math.dist(g.ego_pos, g.obstacle_pos) > MAX_APPROACH:
            bad("gt_distance", f"obstacle {g.obstacle}: completion positions more than 10 m apart", p)
    return ValidationReport(tuple(out))
