"""Seeded rejection sampling of listener-verified scene scripts."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass

from ..compiler import compile_script
from ..errors import CompileError, InfeasibleSceneError, L2IError, ParameterRangeError
from ..motion import Stop
from ..road import build_variant
from ..script import (DEFAULT_FOOTPRINTS, GOALS_BY_KIND, INTERACTION_TYPES, GtInteraction, ObjectSpec, SceneScript,
                      Waypoint, canonical, validate_script)
from ..sim import listen, simulate
from .design import Reject, connector_lanes, design_scene, home_routes, place_lane_objects

DEFAULT_RETRY_BUDGET = 1000
TYPE_WEIGHTS = (("bypass", 0.45), ("overtake", 0.35), ("yield", 0.2))
VERIFY_DT = 0.1


@dataclass(frozen=True)
class GenSpec:
    kind: str
    variant: str
    obstacle_count: int
    seed: int
    targets: tuple | None = None  # interaction type per obstacle; None draws them
    retry_budget: int = DEFAULT_RETRY_BUDGET

    def __post_init__(self):
        if not 1 <= self.obstacle_count <= 5:
            raise ParameterRangeError(f"obstacle_count must be in 1..5, got {self.obstacle_count}")
        if self.retry_budget < 1:
            raise ParameterRangeError(f"retry_budget must be at least 1, got {self.retry_budget}")
        if self.targets is not None:
            if len(self.targets) != self.obstacle_count:
                raise ParameterRangeError("targets must name one interaction type per obstacle")
            bad = [t for t in self.targets if t not in INTERACTION_TYPES]
            if bad:
                raise ParameterRangeError(f"unknown interaction type(s): {', '.join(bad)}")

    @property
    def ref(self):
        return f"{self.kind}/{self.variant}"


def _draw_types(rng, n):
    out = []
    for _ in range(n):
        r = rng.random()
        for t, w in TYPE_WEIGHTS:
            r -= w
            if r <= 0:
                break
        out.append(t)
    return tuple(out)


def _waypoints(prog, traj):
    """Instruction-boundary knots as waypoints, ready for one-decimal rounding."""
    knots = traj.knots
    ins = prog.instructions
    if all(isinstance(i, Stop) for i in ins):
        x, y = knots[0][1], knots[0][2]
        return (Waypoint(x, y, 0.0, 0.0, True),)
    delay = ins[0].duration if isinstance(ins[0], Stop) and not ins[0].permanent else 0.0
    wps = [Waypoint(knots[0][1], knots[0][2], 0.0, delay)]
    first = 2 if delay > 0 else 1
    for t, x, y, v in knots[first:]:
        wps.append(Waypoint(x, y, round(v, 1)))
    last = wps[-1]
    wps[-1] = Waypoint(last.x, last.y, 0.0, 0.0, True)
    return tuple(wps)


def verify(script, topo, targets=None):
    """Compile, simulate and listen; returns (events, reasons). Empty reasons means accepted."""
    reasons = [f"validation: {v.code}" for v in validate_script(script, topo).violations]
    if reasons:
        return [], reasons
    try:
        progs = compile_script(script, topo)
        trajs = simulate(progs, topo, dt=VERIFY_DT)
    except L2IError as exc:
        return [], [f"{type(exc).__name__}: {exc}"]
    events, safety = listen(trajs, script, topo)
    reasons = [f"{ev.kind} {ev.objects} at t={ev.t:.1f}" for ev in safety]
    got = {ev.obstacle_index: ev for ev in events}
    for o in script.obstacles:
        ev = got.get(o.index)
        want = targets.get(o.index) if targets else None
        if ev is None:
            reasons.append(f"object {o.index}: no interaction detected")
        elif want is not None and ev.type != want:
            reasons.append(f"object {o.index}: detected {ev.type}, wanted {want}")
    return events, reasons


def _attempt(rng, spec, topo, routes, conn):
    goals = GOALS_BY_KIND[topo.kind]
    goal = goals[rng.randrange(len(goals))]
    types = spec.targets or _draw_types(rng, spec.obstacle_count)
    design = design_scene(rng, topo, goal, types, routes.get(goal), conn)
    ego_prog, marks = design.ego_program()
    progs = [ego_prog] + design.convoy_programs()
    trajs = {tr.object_index: tr for tr in simulate(progs, topo, dt=VERIFY_DT)}
    progs += place_lane_objects(design, trajs[0], marks)
    trajs.update({tr.object_index: tr for tr in simulate(progs[len(trajs):], topo, dt=VERIFY_DT)})
    objects = tuple(ObjectSpec(p.object_index, p.object_class, DEFAULT_FOOTPRINTS[p.object_class])
                    for p in sorted(progs, key=lambda p: p.object_index))
    wps = {p.object_index: _waypoints(p, trajs[p.object_index]) for p in progs}
    script = canonical(SceneScript(topo.ref, goal, objects, wps))
    targets = {i + 1: t for i, t in enumerate(types)}
    events, reasons = verify(script, topo, targets)
    if reasons:
        raise Reject("; ".join(reasons[:3]))
    gts = tuple(GtInteraction(ev.obstacle_index, ev.type, ev.ego_pos, ev.obstacle_pos)
                for ev in sorted(events, key=lambda e: e.obstacle_index))
    final = canonical(SceneScript(script.topology_ref, goal, script.objects, script.trajectories, gts))
    bad = validate_script(final, topo).violations
    if bad:
        raise Reject("ground truth: " + ", ".join(v.code for v in bad))
    return final


def _route_table(topo):
    # cached on the topology object, which is immutable once built
    table = getattr(topo, "_design_routes", None)
    if table is None:
        table = ({g: home_routes(topo, g) for g in GOALS_BY_KIND[topo.kind]}, connector_lanes(topo))
        topo._design_routes = table
    return table


def sample_scene(spec: GenSpec, topology=None) -> SceneScript:
    """Draw designs until one passes listener verification.

    Raises InfeasibleSceneError carrying the most frequent rejection
    reasons once the retry budget is spent.
    """
    topo = topology or build_variant(spec.kind, spec.variant)
    routes, conn = _route_table(topo)
    rng = random.Random(spec.seed)
    tally = Counter()
    last = []
    for _ in range(spec.retry_budget):
        try:
            return _attempt(rng, spec, topo, routes, conn)
        except (Reject, CompileError) as exc:
            msg = str(exc)
            tally[msg.split(";")[0]] += 1
            last = (last + [msg])[-5:]
        except L2IError as exc:
            tally[f"{type(exc).__name__}"] += 1
            last = (last + [str(exc)])[-5:]
    top = [f"{n}x {m}" for m, n in tally.most_common(5)]
    raise InfeasibleSceneError(f"{spec.ref} with {spec.obstacle_count} obstacle(s): retry budget of "
                               f"{spec.retry_budget} exhausted", reasons=top + last)
