import contextlib
import io
import json
import shutil

import numpy as np
import pytest
from sklearn.base import clone

from pcra.cli import main
from pcra.io import prepare_scenes
from pcra.pipeline import PcraAssessor, SiteConfig
from pcra.simulate import SimSpec, simulate

TINY = {"epochs": 3, "n_min": 5}
CHAIN = [
    ["simulate", "--n-scenes", "30"],
    ["train"],
    ["eval"],
    ["build-dists"],
    ["assess"],
    ["report"],
]
ARTIFACTS = [
    "config.json", "raw_scenes.csv", "labels.json", "scenes.csv", "split.json", "ingest.json",
    "models/vehicle_speed.json", "models/pedestrian_degree.json", "loss_curves.csv",
    "mse.json", "table3.txt", "dists.json", "assessments.jsonl", "report.json", "table4.txt",
]


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def chain(capsys, out, cfg):
    for step in CHAIN:
        code, stdout, err = run(capsys, *step, "--out", str(out), "--config", str(cfg))
        assert code == 0, err
        assert json.loads(stdout)["status"] == "ok"


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "tiny.json"
    p.write_text(json.dumps(TINY))
    return p


@pytest.fixture(scope="module")
def built(tmp_path_factory, cfg_file):
    out = tmp_path_factory.mktemp("run")
    with contextlib.redirect_stdout(io.StringIO()):
        for step in CHAIN:
            assert main([*step, "--out", str(out), "--config", str(cfg_file)]) == 0
    return out


def test_full_chain_artifacts(built):
    for name in ARTIFACTS:
        assert (built / name).exists(), name
    report = json.loads((built / "report.json").read_text())
    split = json.loads((built / "split.json").read_text())
    assert report["counts"]["total_scenes"] == len(split["test"])
    assert "ground_truth" in report and "mse" in report
    assert "Target spot" in (built / "table4.txt").read_text()
    assert json.loads((built / "config.json").read_text())["epochs"] == 3


def test_rerun_is_byte_identical(built, cfg_file, tmp_path, capsys):
    chain(capsys, tmp_path, cfg_file)
    for name in ARTIFACTS:
        assert (tmp_path / name).read_bytes() == (built / name).read_bytes(), name


def test_missing_input_reports_file(tmp_path, capsys):
    code, out, err = run(capsys, "ingest", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o"))
    assert code == 2 and out == ""
    rec = json.loads(err)
    assert rec["status"] == "error" and rec["stage"] == "ingest"
    assert "nope.csv" in rec["path"]


def test_stage_without_prerequisites(tmp_path, capsys):
    code, _, err = run(capsys, "train", "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["path"].endswith("split.json")


def test_malformed_csv_line(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("scene_id,object_id,class,frame,time_s,x,y\na,v,vehicle,0,x,0,0\n")
    code, _, err = run(capsys, "ingest", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "o"))
    assert code == 2
    assert json.loads(err)["line"] == 2


def test_version_mismatch_reported(built, tmp_path, capsys):
    out = tmp_path / "copy"
    shutil.copytree(built, out)
    data = json.loads((out / "dists.json").read_text())
    data["version"] = "pcra-dists-v0"
    (out / "dists.json").write_text(json.dumps(data))
    code, _, err = run(capsys, "assess", "--out", str(out))
    assert code == 2
    rec = json.loads(err)
    assert rec["error"] == "ArtifactError" and "pcra-dists-v0" in rec["message"]


def test_assess_needs_no_training_scenes(built, tmp_path, capsys):
    """Assessing external scenes reads only models, distributions and config."""
    out = tmp_path / "copy"
    shutil.copytree(built, out)
    ext = tmp_path / "ext"
    code, _, _ = run(capsys, "simulate", "--n-scenes", "6", "--sim-seed", "77", "--out", str(ext))
    assert code == 0
    for name in ("raw_scenes.csv", "scenes.csv", "split.json"):
        (out / name).unlink()
    code, stdout, err = run(capsys, "assess", "--scenes", str(ext / "scenes.csv"), "--out", str(out))
    assert code == 0, err
    assert json.loads(stdout)["total_scenes"] == 6
    code, _, err = run(capsys, "assess", "--scenes", str(ext / "scenes.csv"), "--jobs", "2", "--out", str(out / "par"))
    # a fresh out dir has no models
    assert code == 2


def test_parallel_assess_matches_serial(built, tmp_path, capsys):
    out = tmp_path / "copy"
    shutil.copytree(built, out)
    assert run(capsys, "assess", "--jobs", "2", "--out", str(out))[0] == 0
    assert (out / "assessments.jsonl").read_bytes() == (built / "assessments.jsonl").read_bytes()


def test_render(built, tmp_path, capsys):
    out = tmp_path / "copy"
    shutil.copytree(built, out)
    sid = json.loads((out / "split.json").read_text())["test"][0]
    code, stdout, err = run(capsys, "render", sid, "--out", str(out))
    assert code == 0, err
    svg = (out / "render" / f"{sid}.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    code, _, err = run(capsys, "render", "no-such-scene", "--out", str(out))
    assert code == 2 and "no-such-scene" in json.loads(err)["message"]


def test_bad_flag_value(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--alpha", "1.5", "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"] == "ConfigurationError"


def test_assessor_is_sklearn_estimator():
    cfg = SiteConfig(epochs=2, n_min=5)
    est = PcraAssessor(cfg, n_jobs=1)
    assert est.get_params() == {"config": cfg, "n_jobs": 1}
    assert clone(est).get_params()["config"] == cfg
    scenes, _ = simulate(SimSpec(n_scenes=20, seed=3), cfg.roi)
    scenes = prepare_scenes(scenes)
    labels = est.fit(scenes[:15]).predict(scenes[15:])
    assert labels.shape == (5,)
    assert set(labels) <= {"danger", "warning", "relative_safe", "skipped"}
    np.testing.assert_array_equal(PcraAssessor(cfg, n_jobs=2).fit(scenes[:15]).predict(scenes[15:]), labels)
