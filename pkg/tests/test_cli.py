import json
import os

import numpy as np
import pytest

from xlog import cli
from xlog.cli import main, parse_config_file

SPEC = {
    "classes": [
        {"label": "cls_a", "motif": ["mot_a"], "cases": 16},
        {"label": "cls_b", "motif": ["mot_m"], "cases": 16},
    ],
    "noise_vocab": 6, "min_length": 4, "max_length": 7,
    "age_rule": {"label": "cls_b", "threshold": 70},
}


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def pipeline(tmp_path):
    """synth -> ingest shared by the command tests."""
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC), encoding="utf-8")
    assert run("synth", "--spec", spec_path, "--seed", 3,
               "--out", tmp_path / "synth") == 0
    assert run("ingest", "--csv", tmp_path / "synth" / "events.csv",
               "--schema", tmp_path / "synth" / "schema.json",
               "--min-class", 4, "--window", 7, "--split", "0.25",
               "--seed", 3, "--out", tmp_path / "data") == 0
    return tmp_path


def test_synth_writes_log_and_manifest(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC), encoding="utf-8")
    assert run("synth", "--spec", spec_path, "--seed", 1,
               "--out", tmp_path / "out") == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["age_rule"]["threshold"] == 70
    assert "meta" in manifest
    lines = (tmp_path / "out" / "events.csv").read_text().splitlines()
    assert lines[0].startswith("case_id,")


def test_ingest_outputs(pipeline):
    data = pipeline / "data"
    report = json.loads((data / "cleaning_report.json").read_text())
    assert report["imputed_labels"] == 0
    assert sorted(report["kept_classes"]) == ["cls_a", "cls_b"]
    split = json.loads((data / "split.json").read_text())
    assert len(split["train"]) + len(split["test"]) == 32
    for name in ("sequences.xlg", "flat.xlg", "vocab.json"):
        assert (data / name).exists()


def test_ingest_imputes_unlabeled_case(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC), encoding="utf-8")
    run("synth", "--spec", spec_path, "--seed", 2, "--out", tmp_path / "synth")
    csv_path = tmp_path / "synth" / "events.csv"
    lines = csv_path.read_text().splitlines()
    # blank out the diagnosis of one case (column 9)
    target = lines[1].split(",")[0]
    for i, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if cells[0] == target:
            cells[9] = ""
            lines[i] = ",".join(cells)
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert run("ingest", "--csv", csv_path,
               "--schema", tmp_path / "synth" / "schema.json",
               "--min-class", 4, "--window", 7, "--seed", 2,
               "--out", tmp_path / "data") == 0
    report = json.loads((tmp_path / "data" / "cleaning_report.json").read_text())
    assert report["imputed_labels"] == 1


def test_train_forest_grid_table(pipeline):
    out = pipeline / "forest"
    assert run("train", "--data", pipeline / "data", "--model", "forest",
               "--grid", "20x4,40x8", "--cv-k", 3, "--seed", 5,
               "--out", out) == 0
    table = json.loads((out / "train_table.json").read_text())
    assert len(table["rows"]) == 2
    assert sum(r["best"] for r in table["rows"]) == 1
    assert "test_accuracy" in table["rows"][0]
    assert (out / "forest.json").exists()
    assert (out / "importance.svg").read_text().startswith("<svg")
    csv_lines = (out / "train_table.csv").read_text().splitlines()
    assert csv_lines[0].startswith("# config=")


def test_train_seqnet_three_architectures(pipeline):
    out = pipeline / "nets"
    assert run("train", "--data", pipeline / "data", "--model", "seqnet",
               "--grid", "dense:6:2,lstm:6:2,bilstm:6:2", "--seed", 5,
               "--lr", "0.3", "--out", out) == 0
    table = json.loads((out / "train_table.json").read_text())
    assert [set(r) >= {"architecture", "nodes", "epochs", "accuracy", "loss"}
            for r in table["rows"]] == [True] * 3
    accs = [r["accuracy"] for r in table["rows"]]
    assert accs == sorted(accs, reverse=True)
    assert (out / "seqnet.xlg").exists()
    assert (out / "curve.csv").exists() and (out / "curve.svg").exists()


def test_train_rerun_identical_reports(pipeline):
    a, b = pipeline / "runA", pipeline / "runB"
    for out in (a, b):
        assert run("train", "--data", pipeline / "data", "--model", "forest",
                   "--grid", "15x4", "--cv-k", 2, "--seed", 9, "--out", out) == 0
    for name in ("train_table.json", "train_table.csv", "forest.json",
                 "importance.json", "importance.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.fixture
def trained(pipeline):
    run("train", "--data", pipeline / "data", "--model", "forest",
        "--grid", "25x6", "--cv-k", 2, "--seed", 5, "--out", pipeline / "forest")
    run("train", "--data", pipeline / "data", "--model", "lstm",
        "--grid", "8x25", "--seed", 5, "--lr", "0.5", "--out", pipeline / "lstm")
    return pipeline


def test_explain_lime_single_instance(trained):
    out = trained / "exp"
    assert run("explain", "--data", trained / "data",
               "--checkpoint", trained / "forest" / "forest.json",
               "--method", "lime", "--instance", "0", "--k-features", 3,
               "--n-samples", 300, "--seed", 4, "--out", out) == 0
    files = sorted(os.listdir(out))
    assert any(f.startswith("lime_") and f.endswith(".json") for f in files)
    assert any(f.endswith(".svg") for f in files)
    payload = json.loads((out / files[0]).read_text())
    assert len(payload["weights"]) <= 3


def test_explain_submodular_pick(trained):
    out = trained / "pick"
    target = 1  # cls_b, the age-rule class
    assert run("explain", "--data", trained / "data",
               "--checkpoint", trained / "forest" / "forest.json",
               "--method", "pick", "--target", target, "--budget", 2,
               "--k-features", 3, "--n-samples", 300, "--max-candidates", 4,
               "--seed", 4, "--out", out) == 0
    summary = json.loads((out / "global_summary.json").read_text())
    assert len(summary["picked"]) <= 2
    assert summary["coverage"] > 0


def test_explain_curves(trained):
    for method in ("pdp", "ice", "ale"):
        out = trained / f"c_{method}"
        assert run("explain", "--data", trained / "data",
                   "--checkpoint", trained / "forest" / "forest.json",
                   "--method", method, "--feature", "age", "--target", 1,
                   "--grid-points", 4, "--seed", 1, "--out", out) == 0
        assert (out / f"{method}_age.csv").exists()
        assert (out / f"{method}_age.svg").exists()


def test_explain_surrogate_report(trained):
    out = trained / "sur"
    assert run("explain", "--data", trained / "data",
               "--checkpoint", trained / "forest" / "forest.json",
               "--method", "surrogate", "--surrogate-kind", "tree",
               "--seed", 1, "--out", out) == 0
    rep = json.loads((out / "surrogate_report.json").read_text())
    assert 0.0 <= rep["agreement"] <= 1.0


def test_explain_rejects_seqnet_checkpoint(trained):
    with pytest.raises(SystemExit, match="forest"):
        run("explain", "--data", trained / "data",
            "--checkpoint", trained / "lstm" / "seqnet.xlg.json",
            "--method", "lime", "--instance", "0",
            "--out", trained / "bad")


def test_project_outputs(trained):
    out = trained / "proj"
    assert run("project", "--data", trained / "data",
               "--checkpoint", trained / "lstm" / "seqnet.xlg",
               "--layer", 0, "--bottleneck", 2, "--k", 2, "--epochs", 60,
               "--seed", 2, "--out", out) == 0
    csv_text = (out / "projection.csv").read_text()
    assert csv_text.splitlines()[1] == "id,x,y,true,predicted,cluster"
    report = json.loads((out / "cluster_report.json").read_text())
    assert report["k"] == 2 and report["layer_width"] == 8
    assert (out / "projection.svg").read_text().startswith("<svg")


def test_project_grid_mode(trained):
    out = trained / "projgrid"
    assert run("project", "--data", trained / "data",
               "--checkpoint", trained / "lstm" / "seqnet.xlg",
               "--bottleneck-grid", "2,4", "--k", 2, "--epochs", 40,
               "--seed", 2, "--out", out) == 0
    grid = json.loads((out / "ae_grid.json").read_text())
    assert len(grid["rows"]) == 2
    assert sum(r["best"] for r in grid["rows"]) == 1


def test_project_rejects_non_planar_bottleneck(trained):
    with pytest.raises(SystemExit, match="fixed at 2"):
        run("project", "--data", trained / "data",
            "--checkpoint", trained / "lstm" / "seqnet.xlg",
            "--bottleneck", 3, "--out", trained / "nope")


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("""
# comment
seed = 7
window = 12
split = 0.25
model = "forest"
flag = true
""", encoding="utf-8")
    parsed = parse_config_file(cfg)
    assert parsed == {"seed": 7, "window": 12, "split": 0.25,
                      "model": "forest", "flag": True}


def test_config_file_flags_override(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC), encoding="utf-8")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"seed = 999\nspec = \"{spec_path}\"\n", encoding="utf-8")
    assert run("synth", "--config", cfg, "--seed", 3,
               "--out", tmp_path / "o1") == 0
    assert run("synth", "--spec", spec_path, "--seed", 3,
               "--out", tmp_path / "o2") == 0
    a = (tmp_path / "o1" / "events.csv").read_bytes()
    b = (tmp_path / "o2" / "events.csv").read_bytes()
    assert a == b  # flag seed (3) overrode config seed (999)


def test_missing_required_flag_fails(tmp_path):
    with pytest.raises(SystemExit):
        run("synth", "--out", tmp_path / "x")


def test_failure_removes_partial_files(tmp_path, monkeypatch):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(SPEC), encoding="utf-8")
    import xlog.synth as synth_mod
    real = synth_mod.log_to_csv

    def boom(log):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(synth_mod, "log_to_csv", boom)
    code = run("synth", "--spec", spec_path, "--seed", 1, "--out", tmp_path / "f")
    assert code == 1
    leftovers = [p for p in (tmp_path / "f").glob("*")] if (tmp_path / "f").exists() else []
    assert leftovers == []


def test_bench_runs_and_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "b1", tmp_path / "b2"
    assert run("bench", "--seed", 11, "--out", a) == 0
    assert run("bench", "--seed", 11, "--out", b) == 0
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b and len(files_a) > 15
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_forest_grid_accepts_reference_table_cells():
    from xlog.cli import _parse_forest_grid
    assert _parse_forest_grid("1000x100,1500x200") == [(1000, 100), (1500, 200)]


def test_fit_forest_clamps_max_features_to_width(rng=np.random.default_rng(0)):
    from xlog import forest
    X = rng.random((20, 5))
    Y = rng.integers(0, 2, size=20)
    model = forest.fit_forest(X, Y, n_estimators=2, max_features=100, seed=0)
    assert model.max_features == 5
