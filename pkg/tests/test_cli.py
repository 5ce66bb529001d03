import json
import os

import pytest

from l2i.cli import main
from l2i.codetext import parse_code


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "ds"
    assert main(["generate", "--scenes-per-bucket", "1", "--kinds", "straightway,y_shaped", "--out", str(out)]) == 0
    return out


def _scene(dataset, sid="y_shaped-a-n2-000"):
    return str(dataset / "scenes" / f"{sid}.json")


def test_generate_writes_manifest_and_config(dataset):
    manifest = json.loads((dataset / "manifest.json").read_text())
    assert manifest["format"] == "l2i-manifest/1" and manifest["status"] == "complete"
    assert len(manifest["scenes"]) == 20
    cfg = json.loads((dataset / "config.json").read_text())
    assert cfg["command"] == "generate" and cfg["seed"] == 0 and cfg["formats"]["script"] == "l2i-script/1"


def test_topology_emits_file(tmp_path):
    assert main(["topology", "cross", "b", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "cross-b.xodr").exists() and (tmp_path / "config.json").exists()


def test_compile_then_describe_then_parse(dataset, tmp_path, capsys):
    assert main(["compile", _scene(dataset)]) == 0
    code = capsys.readouterr().out
    assert code.startswith("# l2i-code/1\n")
    assert main(["describe", _scene(dataset), "--paraphrase-seed", "3", "--out", str(tmp_path / "d")]) == 0
    assert main(["parse-nl", str(tmp_path / "d" / "description.txt"), "--out", str(tmp_path / "p")]) == 0
    parsed = parse_code((tmp_path / "p" / "code.txt").read_text())
    assert [p.object_index for p in parsed] == [p.object_index for p in parse_code(code)]


def test_evaluate_identity(dataset, tmp_path):
    assert main(["simulate", _scene(dataset), "--out", str(tmp_path / "sim"), "--plot", str(tmp_path / "s.png")]) == 0
    dump = str(tmp_path / "sim" / "trajectories.traj")
    assert main(["evaluate", dump, dump, "--out", str(tmp_path / "ev"), "--figures", str(tmp_path / "fig")]) == 0
    agg = json.loads((tmp_path / "ev" / "report.json").read_text())["aggregate"]
    assert (agg["T"], agg["D"], agg["R"]) == (0.0, 0.0, 1.0)
    assert (tmp_path / "s.png").stat().st_size > 0
    assert sorted(os.listdir(tmp_path / "fig")) == ["metrics_hist.png", "success_by_type.png"]


def test_code_syntax_error_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.code"
    bad.write_text('# l2i-code/1\nobj0 = Object(index=0, class="ego_car", at=(1.0, 2.0), lane="r0_-1")\n'
                   "obj0.Cruse(distance=5.0)\n")
    assert main(["simulate", str(bad), "--topology", "straightway/a"]) == 1
    err = capsys.readouterr().err
    assert "unknown function 'Cruse' at line 3" in err


def test_version_mismatch_is_reported(tmp_path, capsys):
    dump = tmp_path / "old.traj"
    dump.write_text("# l2i-traj/0\n")
    assert main(["evaluate", str(dump), str(dump)]) == 1
    assert "l2i-traj/1" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    assert main(["compile", "x.json", "--bogus"]) == 1
    assert "unrecognized arguments" in capsys.readouterr().err


def test_split(dataset, tmp_path):
    assert main(["split", str(dataset / "manifest.json"), "--protocol", "obstacle_count", "--k", "2",
                 "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "split-obstacle_count.json").read_text())
    assert doc["counts"]["train"] == 8 and doc["counts"]["test"] == 12


def test_baseline_scores_perfectly_and_reruns_identically(dataset, tmp_path):
    for name in ("a", "b"):
        assert main(["baseline", str(dataset), "--paraphrase-seed", "2", "--out", str(tmp_path / name),
                     "--jobs", "2" if name == "b" else "1"]) == 0
    rep = (tmp_path / "a" / "report.json").read_text()
    agg = json.loads(rep)["aggregate"]
    assert agg["T"] <= 1e-6 and agg["R"] == 1.0
    assert rep == (tmp_path / "b" / "report.json").read_text()
    assert len(os.listdir(tmp_path / "a" / "code")) == 20
