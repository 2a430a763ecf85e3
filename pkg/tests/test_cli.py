import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from treefanova import ensemble, fanova
from treefanova.cli import EXIT_MODEL, EXIT_VERIFY, main
from treefanova.ensemble import Ensemble, Leaf, Split


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["simulate", "--n", "600", "--seed", "2", "--out", str(root)]) == 0
    common = ["--data", str(root / "friedman.csv"), "--n-estimators", "300", "--learning-rate", "0.2", "--l2", "20"]
    assert main(["train", *common, "--max-depth", "2", "--out", str(root / "m2")]) == 0
    assert main(["interpret", "--model", str(root / "m2/model.json"), "--data", str(root / "m2/train.csv"),
                 "--out", str(root / "m2")]) == 0
    return root


def svg_ok(path):
    ET.parse(path)
    return True


def test_train_outputs(workdir):
    out = workdir / "m2"
    for name in ["model.json", "config.json", "metrics.json", "fit_report.json", "train.csv", "valid.csv",
                 "test.csv", "train.manifest.json"]:
        assert (out / name).exists(), name
    manifest = json.loads((out / "train.manifest.json").read_text())
    assert manifest["command"] == "train"
    assert len(manifest["inputs"]) == 1 and len(next(iter(manifest["inputs"].values()))) == 64
    assert manifest["exit_code"] == 0


def test_train_is_reproducible(workdir, tmp_path):
    args = ["train", "--data", str(workdir / "friedman.csv"), "--n-estimators", "50", "--seed", "4"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    for name in ["model.json", "metrics.json", "train.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_monotone_flag(workdir, tmp_path):
    rc = main(["train", "--data", str(workdir / "friedman.csv"), "--n-estimators", "80", "--max-depth", "3",
               "--monotone", "x1:+1", "--out", str(tmp_path)])
    assert rc == 0
    checks = json.loads((tmp_path / "metrics.json").read_text())["checks"]
    assert checks["monotone:x1"]["passed"]


def test_depth_one_only_line_plots(workdir, tmp_path):
    main(["train", "--data", str(workdir / "friedman.csv"), "--n-estimators", "60", "--max-depth", "1",
          "--out", str(tmp_path)])
    assert main(["interpret", "--model", str(tmp_path / "model.json"), "--out", str(tmp_path)]) == 0
    plots = sorted((tmp_path / "effects").glob("*.svg"))
    assert plots and all("_x_" not in p.name for p in plots)
    assert all("heatmap" not in p.read_text() for p in plots)


def test_interpret_verify(workdir, capsys):
    out = workdir / "m2"
    rc = main(["interpret", "--model", str(out / "model.json"), "--data", str(out / "train.csv"),
               "--verify", "--top-k", "3", "--out", str(out / "verify")])
    assert rc == 0
    assert "ok" in capsys.readouterr().out
    assert len(list((out / "verify/effects").glob("*.svg"))) == 3
    checks = json.loads((out / "verify/interpret.manifest.json").read_text())["checks"]
    assert checks["reconstruction"]["max_abs_error"] < 1e-8


def test_verify_failure_exits_nonzero(workdir, tmp_path, monkeypatch):
    monkeypatch.setattr("treefanova.cli.VERIFY_TOL", 0.0)
    out = workdir / "m2"
    rc = main(["interpret", "--model", str(out / "model.json"), "--data", str(out / "train.csv"),
               "--verify", "--out", str(tmp_path)])
    assert rc == EXIT_VERIFY


def test_heatmap_metadata(workdir):
    heat = sorted((workdir / "m2/effects").glob("*_x_*.svg"))[0]
    root = ET.parse(heat).getroot()
    meta = json.loads(root.find("{http://www.w3.org/2000/svg}metadata").text)
    scale = meta["color_scale"]
    assert scale["min"] == -scale["max"] and scale["center"] == 0.0


def test_prune_and_importance(workdir):
    out = workdir / "m2"
    rc = main(["prune", "--fanova", str(out / "fanova.json"), "--data", str(out / "train.csv"),
               "--test", str(out / "test.csv"), "--out", str(out)])
    assert rc == 0
    result = json.loads((out / "prune_result.json").read_text())
    assert result["path"] and "delta" in result["test"]
    assert svg_ok(out / "path.svg")
    assert main(["importance", "--fanova", str(out / "pruned.json"), "--data", str(out / "train.csv"),
                 "--out", str(out)]) == 0
    imp = json.loads((out / "importance.json").read_text())
    assert sum(e["importance"] for e in imp["effects"]) == pytest.approx(1.0, abs=1e-9)
    assert sum(f["importance"] for f in imp["features"]) == pytest.approx(1.0, abs=1e-9)


def test_prune_lambda_inf(workdir, tmp_path, capsys):
    out = workdir / "m2"
    rc = main(["prune", "--fanova", str(out / "fanova.json"), "--data", str(out / "train.csv"),
               "--lambda", "inf", "--out", str(tmp_path)])
    assert rc == 0
    assert "warning" in capsys.readouterr().err
    assert fanova.load(tmp_path / "pruned.json").effects == {}
    assert json.loads((tmp_path / "prune_result.json").read_text())["lambda"] == "inf"


def test_explain_sums_to_prediction(workdir, tmp_path):
    out = workdir / "m2"
    assert main(["explain", "--fanova", str(out / "fanova.json"), "--data", str(out / "test.csv"),
                 "--index", "5", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "explain.json").read_text())
    effects = sum(e["contribution"] for e in payload["effects"])
    features = sum(f["contribution"] for f in payload["features"])
    assert payload["intercept"] + effects == pytest.approx(payload["prediction"], abs=1e-9)
    assert payload["intercept"] + features == pytest.approx(payload["prediction"], abs=1e-9)
    assert "actual" in (tmp_path / "explain_effects.svg").read_text()


def test_explain_index_out_of_range(workdir, tmp_path):
    out = workdir / "m2"
    rc = main(["explain", "--fanova", str(out / "fanova.json"), "--data", str(out / "test.csv"),
               "--index", "100000", "--out", str(tmp_path)])
    assert rc == 2


def test_explain_intercept_only(tmp_path):
    fm = fanova.FanovaModel(2.0, {}, feature_names=["a", "b"])
    fanova.save(fm, tmp_path / "f.json")
    assert main(["explain", "--fanova", str(tmp_path / "f.json"), "--row", "0.1,0.2", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "explain.json").read_text())
    assert payload["effects"] == [] and payload["prediction"] == 2.0


def test_import_and_arity_error(tmp_path):
    deep = Split(0, 0.5, Split(1, 0.5, Split(2, 0.5, Split(3, 0.5, Leaf(1), Leaf(2)), Leaf(0)), Leaf(0)), Leaf(0))
    dump = ensemble.export_tree_dump(Ensemble([deep], [1.0], 0.0, "identity", list("abcd")))
    (tmp_path / "dump.json").write_text(json.dumps(dump))
    assert main(["import", "--dump", str(tmp_path / "dump.json"), "--feature-names", "a,b,c,d",
                 "--out", str(tmp_path)]) == 0
    assert ensemble.load(tmp_path / "model.json").n_trees == 1
    rc = main(["interpret", "--model", str(tmp_path / "model.json"), "--out", str(tmp_path)])
    assert rc == EXIT_MODEL


def test_report(workdir):
    out = workdir / "m2"
    rc = main(["report", "--model", str(out / "model.json"), "--data", str(out / "train.csv"),
               "--out", str(out / "report")])
    assert rc == 0
    html = (out / "report/report.html").read_text()
    assert "importance_features.svg" in html
    assert json.loads((out / "report/summary.json").read_text())["reconstruction_error"] < 1e-8


def test_env_override(workdir, tmp_path, monkeypatch):
    monkeypatch.setenv("TREEFANOVA_MAX_DEPTH", "1")
    monkeypatch.setenv("TREEFANOVA_N_ESTIMATORS", "20")
    assert main(["train", "--data", str(workdir / "friedman.csv"), "--out", str(tmp_path)]) == 0
    model = ensemble.load(tmp_path / "model.json")
    assert model.max_depth == 1 and model.n_trees <= 20


def test_bad_csv_exit_code(tmp_path):
    (tmp_path / "bad.csv").write_text("a,y\n1,2\nzz,3\n4,5\n")
    assert main(["train", "--data", str(tmp_path / "bad.csv"), "--out", str(tmp_path)]) == 2


def test_module_entry_point():
    result = subprocess.run([sys.executable, "-m", "treefanova", "--version"], capture_output=True, text=True)
    assert result.returncode == 0 and "treefanova" in result.stdout
