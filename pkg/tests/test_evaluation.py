import random

import numpy as np
import pytest

from l2i.errors import FormatVersionError, SplitShortfallError
from l2i.evaluation import (EvalReport, SplitManifest, build_splits, interaction_distance, resample,
                            score_scene, success_rate, trajectory_discrepancy)
from l2i.script import GtInteraction
from l2i.sim import InteractionEvent, SafetyEvent


def _line(x0, x1, y=0.0, n=50):
    return np.stack([np.linspace(x0, x1, n), np.full(n, y)], axis=1)


def _ev(j, kind, ego, obs):
    return InteractionEvent(j, kind, ego, obs, 5.0)


def _gt(j, kind, ego, obs):
    return GtInteraction(j, kind, ego, obs)


def test_resample_is_uniform_in_arc_length():
    xy = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
    r = resample(xy, 8)
    steps = np.hypot(*np.diff(r, axis=0).T)
    assert steps == pytest.approx(np.full(7, 1.0))
    assert r[0] == pytest.approx([0, 0]) and r[-1] == pytest.approx([3, 4])


def test_identical_trajectories_score_zero():
    gt = {0: _line(0, 80), 1: _line(30, 31, 3.5)}
    assert trajectory_discrepancy(gt, gt).T == 0.0


def test_constant_ego_offset():
    gt = {0: _line(0, 80), 1: _line(30, 30.0, 3.5, 1)}
    gen = {0: _line(1, 81), 1: gt[1]}
    assert trajectory_discrepancy(gen, gt).T == pytest.approx(1.0, abs=1e-9)


def test_obstacle_offset():
    gt = {0: _line(0, 80), 1: _line(20, 60, 3.5)}
    gen = {0: gt[0], 1: _line(20, 60, 5.5)}
    assert trajectory_discrepancy(gen, gt).T == pytest.approx(4.0, abs=1e-9)


def test_missing_object_penalty_or_skip():
    gt = {0: _line(0, 80), 1: _line(20, 23, 3.5)}
    gen = {0: gt[0]}
    d = trajectory_discrepancy(gen, gt)
    assert d.missing == [1] and d.T == pytest.approx(9.0)
    assert trajectory_discrepancy(gen, gt, penalize_missing=False).T == 0.0


def test_interaction_distance():
    gt = [_gt(1, "bypass", (40.0, 0.0), (45.0, 0.0))]
    assert interaction_distance([_ev(1, "bypass", (40.0, 0.0), (45.0, 0.0))], gt) == (0.0, 1)
    D, n = interaction_distance([_ev(1, "bypass", (43.0, 0.0), (45.0, 0.0))], gt)
    assert n == 1 and D == pytest.approx(9.0, abs=1e-9)


def test_type_mismatch_is_unmatched():
    gt = [_gt(1, "yield", (0.0, 0.0), (5.0, 0.0))]
    gen = [_ev(1, "overtake", (0.0, 0.0), (5.0, 0.0))]
    assert interaction_distance(gen, gt) == (None, 0)
    assert success_rate(gen, gt) == 0.0


def test_four_of_five():
    gt = [_gt(j, "bypass", (10.0 * j, 0.0), (10.0 * j + 4, 0.0)) for j in range(1, 6)]
    gen = [_ev(j, "bypass", (10.0 * j, 0.0), (10.0 * j + 4, 0.0)) for j in range(1, 5)]
    assert success_rate(gen, gt) == 0.8


def test_ego_collision_voids_every_match():
    gt = [_gt(j, "bypass", (10.0 * j, 0.0), (10.0 * j + 4, 0.0)) for j in (1, 2)]
    gen = [_ev(j, "bypass", (10.0 * j, 0.0), (10.0 * j + 4, 0.0)) for j in (1, 2)]
    assert success_rate(gen, gt, [SafetyEvent("collision", (0, 2), 3.0)]) == 0.0
    assert success_rate(gen, gt, [SafetyEvent("collision", (2, 3), 3.0)]) == 0.5


def test_far_completion_is_not_a_match():
    gt = [_gt(1, "bypass", (0.0, 0.0), (5.0, 0.0))]
    assert success_rate([_ev(1, "bypass", (0.0, 0.0), (15.0, 0.0))], gt) == 0.0


class _Tr:
    def __init__(self, idx, xy):
        self.object_index, self.xy = idx, xy


def test_report_round_trip_and_pooling():
    gts = [_gt(1, "bypass", (0.0, 0.0), (5.0, 0.0)), _gt(2, "yield", (1.0, 0.0), (6.0, 0.0))]
    trajs = [_Tr(0, _line(0, 50)), _Tr(1, _line(5, 5, 3.5, 1)), _Tr(2, _line(0, 40, 3.5))]
    a = score_scene("a", trajs, [_ev(1, "bypass", (0.0, 0.0), (5.0, 0.0))], [], trajs, gts)
    b = score_scene("b", trajs, [_ev(1, "bypass", (0.0, 0.0), (5.0, 0.0))], [], trajs, gts[:1])
    rep = EvalReport([b, a], {"W": 100})
    agg = rep.aggregate
    assert agg["R"] == pytest.approx(2 / 3) and agg["R_scene_mean"] == pytest.approx(0.75)
    assert agg["T"] == 0.0 and agg["D"] == 0.0
    again = EvalReport.from_json(rep.to_json())
    assert again.to_json() == rep.to_json()
    with pytest.raises(FormatVersionError):
        EvalReport.from_json('{"format": "l2i-eval/0", "scenes": []}')


# ------------------------------------------------------------------- splits

def _records(n_per_bucket=4, kinds=("straightway", "cross", "roundabout"), seed=0):
    rng = random.Random(seed)
    out = []
    for kind in kinds:
        for variant in "ab":
            for n in range(1, 6):
                for k in range(n_per_bucket):
                    types = [rng.choice(("bypass", "overtake", "yield")) for _ in range(n)]
                    out.append({"id": f"{kind}-{variant}-n{n}-{k:03d}", "kind": kind, "variant": variant,
                                "doubled": variant == "b", "obstacle_count": n, "types": types})
    return out


def test_obstacle_count_ratios():
    scenes = _records(n_per_bucket=8, kinds=("straightway", "cross", "roundabout"))
    assert len(scenes) == 240
    for k, want in ((1, 48), (2, 96), (3, 144), (4, 192)):
        split = build_splits(scenes, "obstacle_count", {"k": k})
        assert (split.counts["train"], split.counts["test"]) == (want, 240 - want)
    with pytest.raises(SplitShortfallError):
        build_splits(scenes, "obstacle_count", {"k": 5})


def test_topology_split_holds_out_doubled_lanes():
    scenes = _records()
    split = build_splits(scenes, "topology_generalization")
    by_id = {s["id"]: s for s in scenes}
    assert all(by_id[i]["doubled"] for i in split.test)
    assert not any(by_id[i]["doubled"] for i in split.train)
    with pytest.raises(SplitShortfallError):
        build_splits([s for s in scenes if not s["doubled"]], "topology_generalization")


@pytest.mark.parametrize("seed", range(5))
def test_motion_split_is_balanced(seed):
    scenes = _records(n_per_bucket=10, kinds=("bend",), seed=seed)
    assert len(scenes) == 100
    split = build_splits(scenes, "motion_translation", seed=seed)
    assert len(split.train) == len(split.test) == 50
    assert not set(split.train) & set(split.test)
    for t in ("bypass", "overtake", "yield"):
        assert abs(split.counts["train_types"][t] - split.counts["test_types"][t]) <= 1


def test_split_manifest_round_trip():
    split = build_splits(_records(), "motion_translation", seed=3)
    assert SplitManifest.from_json(split.to_json()) == split
    assert build_splits(_records(), "motion_translation", seed=3).to_json() == split.to_json()
