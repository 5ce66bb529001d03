import numpy as np
import pytest

from l2i.codetext import emit_code, parse_code
from l2i.compiler import compile_script
from l2i.errors import CodeSemanticError, CodeSyntaxError, FormatVersionError, ImpossibleMotionError, TopologyError
from l2i.motion import ChangeLane, Cruise, Stop, program_sets_equal
from l2i.road import build_variant
from l2i.road.frenet import point_at
from l2i.script import ObjectSpec, SceneScript, Waypoint as W
from l2i.sim import simulate

STRAIGHT = build_variant("straightway", "a")
CROSS = build_variant("cross", "a")


def _scene(*trajs, classes=("ego_car", "traffic_cone", "npc_car"), ref="straightway/a"):
    objs = tuple(ObjectSpec.make(i, classes[i]) for i in range(len(trajs)))
    return SceneScript(ref, "straight", objs, {i: tuple(t) for i, t in enumerate(trajs)})


def test_accelerating_cruise():
    sc = _scene([W(0, -1.75, 0), W(25, -1.75, 10)])
    (p,) = compile_script(sc, STRAIGHT)
    assert p.instructions == (Cruise(25.0, 0.0, 2.0), Stop(permanent=True))
    assert p.start.lane_id == "r0_-1"


def test_lane_change_and_pause():
    sc = _scene([W(10, -1.75, 0), W(35, -1.75, 10), W(55, -5.25, 10), W(80, -5.25, 0, 3.0), W(100, -5.25, 4)])
    (p,) = compile_script(sc, STRAIGHT)
    kinds = [type(i).__name__ for i in p.instructions]
    assert kinds == ["Cruise", "ChangeLane", "Cruise", "Stop", "Cruise", "Stop"]
    assert p.instructions[1].direction == "right"
    assert p.instructions[3] == Stop(duration=3.0)
    assert p.route == ("r0_-1", "r0_-2")


def test_initial_wait_becomes_stop():
    sc = _scene([W(10, -1.75, 0, 2.0), W(30, -1.75, 5)])
    (p,) = compile_script(sc, STRAIGHT)
    assert p.instructions[0] == Stop(duration=2.0)


def test_static_object_compiles_to_permanent_stop():
    sc = _scene([W(0, -1.75, 0), W(25, -1.75, 10)], [W(60, -1.75, 0)])
    progs = compile_script(sc, STRAIGHT)
    assert progs[1].instructions == (Stop(permanent=True),)


def test_turn_through_junction_follows_connector():
    inbound = CROSS.lane("r0_-1")
    left = CROSS.lane("r103_-1")
    out = CROSS.lane(left.successors[0])
    a, b = point_at(inbound, 60)[0], point_at(out, 30)[0]
    (p,) = compile_script(_scene([W(*a, 0), W(*b, 8)], ref="cross/a"), CROSS)
    assert p.route == ("r0_-1", "r103_-1", out.lane_id)


def test_reverse_motion_is_impossible():
    sc = _scene([W(50, -1.75, 5), W(30, -1.75, 5)])
    with pytest.raises(ImpossibleMotionError, match="reverse"):
        compile_script(sc, STRAIGHT)


def test_zero_speed_segment_is_impossible():
    with pytest.raises(ImpossibleMotionError):
        compile_script(_scene([W(0, -1.75, 0), W(20, -1.75, 0)]), STRAIGHT)


def test_unrelated_lanes_raise_topology_error():
    # the opposite carriageway is neither a successor nor a neighbor
    with pytest.raises(TopologyError):
        compile_script(_scene([W(10, -1.75, 5), W(40, 1.75, 5)]), STRAIGHT)


def test_knots_reproduce_waypoints_with_exact_distances():
    wps = [W(10, -1.75, 0), W(35, -1.75, 10), W(55, -5.25, 10), W(70, -5.25, 10), W(90, -1.75, 10), W(110, -1.75, 0)]
    progs = compile_script(_scene(wps), STRAIGHT, quantum=None)
    tr = simulate(progs, STRAIGHT)[0]
    err = [np.hypot(k[1] - w.x, k[2] - w.y) for k, w in zip(tr.knots, wps)]
    assert max(err) < 1e-3


def test_code_round_trip():
    wps = [W(10, -1.75, 0), W(35, -1.75, 10), W(55, -5.25, 10), W(80, -5.25, 0, 3.0), W(100, -5.25, 4)]
    progs = compile_script(_scene(wps, [W(62.3, -1.75, 0)]), STRAIGHT)
    text = emit_code(progs)
    assert text.startswith("# l2i-code/1\n")
    assert program_sets_equal(parse_code(text), progs, tol=1e-12)
    assert emit_code(parse_code(text)) == text


HEAD = '# l2i-code/1\nobj0 = Object(index=0, class="ego_car", at=(0.0, -1.75), lane="r0_-1")\n'


def test_unknown_function_reports_line_and_column():
    with pytest.raises(CodeSyntaxError) as exc:
        parse_code(HEAD + "obj0.Cruse(distance=25.0, initial_velocity=0.0, accelerated_velocity=2.0)\n")
    assert (exc.value.line, exc.value.column) == (3, 6)
    assert "unknown function 'Cruse' at line 3, column 6" in str(exc.value)


def test_missing_header_rejected():
    with pytest.raises(FormatVersionError):
        parse_code(HEAD.split("\n", 1)[1])


@pytest.mark.parametrize("body, where", [
    ("obj0.Cruise(distance=-1.0, initial_velocity=0.0, accelerated_velocity=2.0)", 0),
    ("obj0.Cruise(distance=10.0, initial_velocity=1.0, accelerated_velocity=-1.0)", 0),
    ("obj0.Cruise(distance=10.0, initial_velocity=0.0, accelerated_velocity=0.0)", 0),
    ("obj0.Stop(duration=2.0, permanent=True)", 0),
    ("obj0.Stop(permanent=True)\nobj0.Stop(duration=1.0)", 1),
])
def test_semantic_errors_name_instruction(body, where):
    with pytest.raises(CodeSemanticError) as exc:
        parse_code(HEAD + body + "\n")
    assert exc.value.instruction == where


def test_comments_exponents_and_name_mismatch():
    progs = parse_code(HEAD + "obj0.Cruise(distance=2.5e1, initial_velocity=0.0, accelerated_velocity=2.0)  # go\n")
    assert progs[0].instructions == (Cruise(25.0, 0.0, 2.0),)
    with pytest.raises(CodeSemanticError):
        parse_code(HEAD.replace("obj0 =", "car ="))


def test_change_lane_parses_direction():
    (p,) = parse_code(HEAD + 'obj0.ChangeLane(direction="left", distance=30.0, initial_velocity=5.0, '
                             'accelerated_velocity=0.0)\n')
    assert p.instructions == (ChangeLane("left", 30.0, 5.0, 0.0),)


def test_emitted_lines_follow_the_grammar():
    wps = [W(10, -1.75, 0), W(35, -1.75, 10), W(55, -1.75, 0, 0, True)]
    progs = compile_script(_scene(wps, [W(62.3, -1.75, 0)]), STRAIGHT)
    lines = emit_code(progs).splitlines()
    assert lines[2] == 'obj0.Cruise(direction="forward", distance=25.0, initial_velocity=0.0, accelerated_velocity=2.0)'
    assert lines[-1] == "obj1.Stop(permanent=true)"
    assert [ln.split(" ")[0] for ln in lines if " = Object(" in ln] == ["obj0", "obj1"]
