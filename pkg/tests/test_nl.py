import re

import pytest

from l2i.compiler import compile_script
from l2i.errors import DescriptionError
from l2i.motion import ChangeLane, Cruise, MotionProgram, StartPose, Stop, program_sets_equal
from l2i.nl import describe_detailed, describe_program, paraphrase, parse_description, scene_text, summarize
from l2i.road import build_variant
from l2i.scenario import GenSpec, sample_scene
from l2i.script import GtInteraction, ObjectSpec, SceneScript, Waypoint

CRUISE = ("Object 0 (ego car) cruises forward along its lane for 25.0 meters, starting at 0.0 m/s "
          "with an acceleration of 2.0 m/s^2.")
NUM = re.compile(r"-?\d+\.\d+")


def _ego(*ins):
    return MotionProgram(0, "ego_car", StartPose(10.0, -1.8, "r0_-1"), tuple(ins) + (Stop(permanent=True),),
                         ("r0_-1",))


def test_cruise_and_stop_sentences():
    sents = [s.text for s in describe_program(_ego(Cruise(25.0, 0.0, 2.0))).sentences]
    assert sents[1] == CRUISE
    assert sents[2] == "Object 0 (ego car) comes to a permanent stop."


def test_paragraphs_ego_first():
    cone = MotionProgram(1, "traffic_cone", StartPose(60.0, -1.8, "r0_-1"), (Stop(permanent=True),), ("r0_-1",))
    desc = describe_detailed([cone, _ego(Cruise(25.0, 0.0, 2.0))])
    assert [p.object_index for p in desc.paragraphs] == [0, 1]
    assert desc.text.count("\n\n") == 1


def _scene(goal, cls, gt_type):
    objects = (ObjectSpec.make(0, "ego_car"), ObjectSpec.make(1, cls))
    wps = {0: (Waypoint(10.0, -1.75, 0.0), Waypoint(60.0, -1.75, 0.0, 0.0, True)),
           1: (Waypoint(100.0, -1.75, 0.0, 0.0, True),)}
    return SceneScript("straightway/a", goal, objects, wps, (GtInteraction(1, gt_type, (0, 0), (0, 0)),))


def test_summary_templates():
    ego = _ego(Cruise(20.0, 0.0, 2.0), ChangeLane("left", 20.0, 8.94, 0.0), Cruise(10.0, 8.94, -4.0))
    s = summarize(_scene("straight", "traffic_cone", "bypass"), ego_program=ego)
    assert s.text == "The ego car goes straight, changing lanes once, and bypasses the traffic cone (object 1)."
    s = summarize(_scene("turn_left", "npc_car", "yield"), ego_program=ego)
    assert "yields to the NPC car (object 1)" in s.text


def test_summary_needs_an_obstacle():
    script = SceneScript("straightway/a", "straight", (ObjectSpec.make(0, "ego_car"),),
                         {0: (Waypoint(10.0, -1.75, 0.0), Waypoint(60.0, -1.75, 0.0, 0.0, True))})
    with pytest.raises(DescriptionError, match="at least one obstacle"):
        summarize(script, ego_program=_ego(Cruise(50.0, 0.0, 1.0)))


def test_paraphrase_seed_zero_and_one():
    assert paraphrase(CRUISE, 0) == CRUISE
    assert paraphrase(CRUISE, 1) == ("Object 0 (ego car) drives straight ahead for 25.0 m, "
                                     "accelerating at 2.0 m/s^2 from 0.0 m/s.")


@pytest.fixture(scope="module")
def scene():
    topo = build_variant("cross", "a")
    script = sample_scene(GenSpec("cross", "a", 3, seed=5, targets=("bypass", "yield", "overtake")), topo)
    progs = compile_script(script, topo)
    return script, topo, progs, scene_text(progs, script, topo)


def test_numbers_survive_1000_paraphrase_seeds(scene):
    text = scene[3]
    want = sorted(NUM.findall(text))
    for seed in range(1000):
        assert sorted(NUM.findall(paraphrase(text, seed))) == want


def test_round_trip_recovers_programs(scene):
    _, _, progs, text = scene
    for seed in range(10):
        parsed = parse_description(paraphrase(text, seed))
        assert parsed.mode == "detailed" and len(parsed.summary) == 1
        assert program_sets_equal(parsed.programs, progs, tol=0.05)


def test_unrecognized_sentence():
    with pytest.raises(DescriptionError, match="unrecognized") as info:
        parse_description("Object 0 teleports.")
    assert info.value.sentence == 0


def test_summary_only_text(scene):
    summary = scene[3].split("\n\n")[-1]
    parsed = parse_description(paraphrase(summary, 4))
    assert parsed.summary_only and parsed.mode == "summary-only"
    assert parsed.programs == []


def test_motion_before_start_is_rejected():
    with pytest.raises(DescriptionError, match="before its start"):
        parse_description(CRUISE)
