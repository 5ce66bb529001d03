import math

import numpy as np
import pytest

from l2i.errors import OffLaneError, ParameterRangeError, StationRangeError, TopologyFileError, UnsupportedPrimitiveError
from l2i.road import (FrenetPose, build_topology, build_variant, builtin_refs, check_invariants, emit_topology_file,
                      from_frenet, parse_topology_file, to_frenet)
from l2i.road.topology import SAMPLE_STEP, topologies_equal


@pytest.fixture(scope="module")
def straight():
    return build_topology("straightway", lane_count=2, lane_width=3.5, scale=200.0)


@pytest.fixture(scope="module")
def variants():
    return {ref: build_variant(*ref.split("/")) for ref in builtin_refs()}


def test_straightway_parallel_lanes(straight):
    fwd = [straight.lanes[f"r0_{k}"] for k in (-1, -2)]
    assert len(straight.lanes) == 4
    gap = np.hypot(*(fwd[0].centerline - fwd[1].centerline).T)
    assert np.allclose(gap, 3.5, atol=1e-12)
    assert fwd[0].length == pytest.approx(200.0, abs=1e-9)
    assert fwd[0].right_neighbor == "r0_-2" and fwd[1].left_neighbor == "r0_-1"


def test_roundabout_circle_length():
    topo = build_topology("roundabout", lane_count=1, lane_width=3.5, scale=20.0)
    ring = [ln for ln in topo.lanes.values() if topo.road(ln.road_id).name.startswith("ring")]
    total = sum(ln.length for ln in ring)
    assert total == pytest.approx(2 * math.pi * 20.0, abs=1e-2)
    # matches the chord-sum of the sampled polygon exactly
    for ln in ring:
        r = np.hypot(*ln.centerline.T)
        assert np.allclose(r, 20.0, atol=1e-9)


def test_cross_arms_offer_all_movements():
    topo = build_topology("cross", lane_count=2, scale=100.0)
    arms = [r for r in topo.roads if r.name.startswith("arm")]
    assert len(arms) == 4
    for arm in arms:
        turns = set()
        for k in (1, 2):
            for nxt in topo.lanes[f"r{arm.id}_{-k}"].successors:
                turns.add(topo.road(topo.lanes[nxt].road_id).name.split(":")[0])
        assert turns == {"straight", "left", "right"}


def test_builtin_variants_valid(variants):
    for ref, topo in variants.items():
        assert check_invariants(topo) == [], ref


def test_doubling_lanes_preserves_connectivity(variants):
    for kind in ("straightway", "bend", "roundabout", "cross", "t_shaped", "y_shaped"):
        a, b = variants[f"{kind}/a"], variants[f"{kind}/b"]
        assert a.kind == b.kind == kind
        assert b.lane_count == 2 * a.lane_count
        assert check_invariants(b) == []


def test_to_frenet_straight(straight):
    topo = build_topology("straightway", lane_count=1, scale=100.0)
    # lane r0_-1 runs along +x at y = -1.75
    pose = to_frenet(topo, "r0_-1", (10.0, -1.75 + 1.5))
    assert pose.s == pytest.approx(10.0, abs=1e-12)
    assert pose.l == pytest.approx(1.5, abs=1e-12)
    assert to_frenet(topo, "r0_-1", (37.0, -1.75)).l == 0.0
    xy, h = from_frenet(topo, FrenetPose("r0_-1", 10.0, 0.0))
    assert np.allclose(xy, (10.0, -1.75)) and h == 0.0


def test_from_frenet_quarter_circle():
    topo = build_topology("roundabout", lane_count=1, scale=20.0)
    lane = topo.lanes["r10_-1"]
    s = 0.4 * lane.length
    xy, h = from_frenet(topo, FrenetPose(lane.lane_id, s, 0.0))
    sagitta = lane.seg_len.max() ** 2 / (8 * 20.0)
    assert 20.0 - sagitta - 1e-9 <= math.hypot(*xy) <= 20.0 + 1e-9
    tangent = math.atan2(xy[1], xy[0]) + math.pi / 2
    assert math.remainder(h - tangent, 2 * math.pi) == pytest.approx(0.0, abs=SAMPLE_STEP / 20.0)


def test_tie_break_lowest_station():
    from l2i.road.topology import Lane

    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
    lane = Lane("x", 0, -1, pts, 3.5, pts, pts)
    from l2i.road.frenet import project

    # (9, 1) is 1 m from both segments
    s, l, i = project(lane, (9.0, 1.0))
    assert i == 0 and s == pytest.approx(9.0)


def test_frenet_errors(straight):
    with pytest.raises(OffLaneError):
        to_frenet(straight, "r0_-1", (10.0, 30.0))
    with pytest.raises(StationRangeError):
        from_frenet(straight, FrenetPose("r0_-1", 500.0, 0.0))


def test_frenet_round_trip_property(variants):
    rng = np.random.default_rng(3)
    worst = 0.0
    checked = 0
    for topo in variants.values():
        lanes = list(topo.lanes.values())
        for _ in range(90):
            lane = lanes[rng.integers(len(lanes))]
            s = rng.uniform(0, lane.length)
            l = 0.0 if rng.random() < 0.5 else rng.uniform(-lane.width / 2, lane.width / 2)
            p, _ = from_frenet(topo, FrenetPose(lane.lane_id, s, l))
            pose = to_frenet(topo, lane.lane_id, p)
            if l != 0.0 and abs(pose.l - l) > 1e-9:
                continue  # lateral offset not preserved (outer side of a polyline vertex)
            q, _ = from_frenet(topo, pose)
            worst = max(worst, float(np.hypot(*(q - p))))
            checked += 1
    assert checked >= 1000
    assert worst < 1e-6


def test_arc_length_is_segment_sum(variants):
    for topo in variants.values():
        for ln in topo.lanes.values():
            seg = np.hypot(*np.diff(ln.centerline, axis=0).T)
            assert abs(ln.length - seg.sum()) <= 1e-9 * ln.length


@pytest.mark.parametrize("kind,scale", [("straightway", 50.0), ("bend", 150.0), ("roundabout", 5.0), ("cross", 10.0)])
def test_scale_bounds(kind, scale):
    with pytest.raises(ParameterRangeError):
        build_topology(kind, lane_count=2, scale=scale)


def test_lane_count_bounds():
    with pytest.raises(ParameterRangeError):
        build_topology("straightway", lane_count=0, scale=200.0)


def test_xodr_round_trip(variants):
    for ref, topo in variants.items():
        data = emit_topology_file(topo)
        again = parse_topology_file(data)
        assert topologies_equal(topo, again), ref
        assert emit_topology_file(again) == data


MINIMAL = b"""<?xml version="1.0"?>
<OpenDRIVE>
  <header version="l2i-xodr/1" kind="straightway" variant="fx" laneCount="1" laneWidth="3.5" scale="100.0" variantSeed="0"/>
  <road id="0" name="main" length="100.0" junction="-1">
    <planView>
      <geometry s="0.0" x="0.0" y="0.0" hdg="0.0" length="100.0">GEOM</geometry>
    </planView>
    <lanes>
      <laneSection s="0.0">
        <left><lane id="1" type="driving"><width sOffset="0.0" a="3.5" b="0.0" c="0.0" d="0.0"/></lane></left>
        <center><lane id="0" type="none"/></center>
        <right><lane id="-1" type="driving"><width sOffset="0.0" a="3.5" b="0.0" c="0.0" d="0.0"/></lane></right>
      </laneSection>
    </lanes>
  </road>
</OpenDRIVE>
"""


def test_minimal_fixture():
    topo = parse_topology_file(MINIMAL.replace(b"GEOM", b"<line/>"))
    assert len(topo.roads) == 1 and len(topo.lanes) == 2


def test_spiral_unsupported():
    data = MINIMAL.replace(b"GEOM", b'<spiral curvStart="0.0" curvEnd="0.01"/>')
    with pytest.raises(UnsupportedPrimitiveError, match="unsupported: spiral") as err:
        parse_topology_file(data)
    assert err.value.offset == data.index(b"<spiral")


def test_malformed_markup_offset():
    data = MINIMAL.replace(b"GEOM", b"<line/>").replace(b"</planView>", b"</plan>")
    with pytest.raises(TopologyFileError, match="byte offset"):
        parse_topology_file(data)


def test_unknown_element_rejected():
    data = MINIMAL.replace(b"GEOM", b"<line/>").replace(b"<planView>", b"<planView><signal/>")
    with pytest.raises(TopologyFileError, match="unknown element <signal>"):
        parse_topology_file(data)
