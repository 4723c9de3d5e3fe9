"""Command line interface: schemas, config resolution, sidecars, exit codes."""

import csv
import hashlib
import json
import re
import subprocess
import sys

import numpy as np
import pytest

from elakit import cli, harness, testbed
from elakit.cli import OUTPUT_ROOT_ENV, entry
from elakit.sampling import build_design
from elakit.testbed import make_instance

_HASH_LINE = re.compile(r"^# config [0-9a-f]{12}$")


def _read_output(path):
    """Returns (hash_line, header, rows) of a tool-written CSV."""
    lines = path.read_text().splitlines()
    assert _HASH_LINE.match(lines[0]), lines[0]
    parsed = list(csv.reader(lines[1:]))
    return lines[0], parsed[0], parsed[1:]


def _run(*argv):
    return entry([str(a) for a in argv])


# -- sample ------------------------------------------------------------------------

def test_sample_writes_design_csv(tmp_path):
    out = tmp_path / "design.csv"
    code = _run("sample", "--fid", 1, "--dim", 3, "--inst", 1,
                "--size", 40, "--seed", 7, "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["x1", "x2", "x3", "y"]
    assert len(rows) == 40
    design = build_design(make_instance(1, 3, 1), 40, seed=7)
    got = np.array([[float(v) for v in row] for row in rows])
    assert np.array_equal(got[:, :3], design.points)   # repr round-trips exactly
    assert np.array_equal(got[:, 3], design.objectives)


def test_sample_reruns_are_byte_identical(tmp_path):
    out = tmp_path / "a.csv"
    assert _run("sample", "--fid", 4, "--dim", 2, "--inst", 3,
                "--size", 25, "--seed", 1, "--out", out) == 0
    first = out.read_bytes()
    assert _run("sample", "--fid", 4, "--dim", 2, "--inst", 3,
                "--size", 25, "--seed", 1, "--out", out) == 0
    assert out.read_bytes() == first


def test_sample_default_size_is_fifty_per_dimension(tmp_path):
    out = tmp_path / "d.csv"
    assert _run("sample", "--dim", 2, "--out", out) == 0
    _, _, rows = _read_output(out)
    assert len(rows) == 100


def test_sidecar_holds_resolved_config_and_matches_hash(tmp_path):
    out = tmp_path / "design.csv"
    _run("sample", "--fid", 2, "--dim", 2, "--size", 30, "--out", out)
    sidecar = tmp_path / "design.csv.config.json"
    cfg = json.loads(sidecar.read_text())
    assert cfg["fid"] == 2 and cfg["size"] == 30 and cfg["command"] == "sample"
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canon.encode()).hexdigest()[:12]
    first = out.read_text().splitlines()[0]
    assert first == f"# config {digest}"


# -- reduce ------------------------------------------------------------------------

def test_reduce_roundtrip(tmp_path):
    design_csv = tmp_path / "design.csv"
    reduced_csv = tmp_path / "reduced.csv"
    _run("sample", "--fid", 5, "--dim", 4, "--size", 50, "--out", design_csv)
    code = _run("reduce", "--in", design_csv, "--m", 2, "--out", reduced_csv)
    assert code == 0
    _, header, rows = _read_output(reduced_csv)
    assert header == ["z1", "z2", "y"]
    assert len(rows) == 50
    _, _, design_rows = _read_output(design_csv)
    assert [r[-1] for r in rows] == [r[-1] for r in design_rows]  # y untouched


def test_reduce_reruns_are_byte_identical(tmp_path):
    design_csv = tmp_path / "design.csv"
    _run("sample", "--fid", 5, "--dim", 4, "--size", 50, "--out", design_csv)
    out = tmp_path / "a.csv"
    assert _run("reduce", "--in", design_csv, "--m", 2, "--out", out) == 0
    first = out.read_bytes()
    assert _run("reduce", "--in", design_csv, "--m", 2, "--out", out) == 0
    assert out.read_bytes() == first


def test_reduce_configuration_errors(tmp_path):
    design_csv = tmp_path / "design.csv"
    _run("sample", "--fid", 1, "--dim", 3, "--size", 30, "--out", design_csv)
    assert _run("reduce", "--in", design_csv, "--m", 3,
                "--out", tmp_path / "r.csv") == 2          # m must be < dim
    assert _run("reduce", "--m", 2, "--out", tmp_path / "r.csv") == 2  # no --in
    assert _run("reduce", "--in", tmp_path / "missing.csv", "--m", 2,
                "--out", tmp_path / "r.csv") == 2


# -- features ----------------------------------------------------------------------

def test_features_single_row_schema(tmp_path):
    out = tmp_path / "f.csv"
    code = _run("features", "--fid", 1, "--dim", 3, "--size", 50,
                "--groups", "ela_meta", "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert len(header) == 11
    assert header[0] == "ela_meta.lin_simple.adj_r2"
    assert header[-1] == "ela_meta.costs_runtime"
    assert len(rows) == 1


def test_features_multiple_groups_and_reduced(tmp_path):
    out = tmp_path / "f.csv"
    assert _run("features", "--dim", 3, "--size", 50,
                "--groups", "ela_distr,basic", "--out", out) == 0
    _, header, _ = _read_output(out)
    assert len(header) == 5 + 15
    out2 = tmp_path / "g.csv"
    assert _run("features", "--dim", 4, "--size", 60, "--groups", "ela_meta",
                "--reduced", "--m", 2, "--out", out2) == 0
    _, header2, _ = _read_output(out2)
    assert all(name.startswith("d_ela_meta.") for name in header2)


def test_features_unknown_group_is_config_error(tmp_path):
    assert _run("features", "--groups", "bogus", "--out", tmp_path / "f.csv") == 2


# -- timebench ----------------------------------------------------------------------

def test_timebench_schema(tmp_path):
    out = tmp_path / "t.csv"
    code = _run("timebench", "--groups", "basic,pca", "--dims", "2,3",
                "--reps", 2, "--size", 30, "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["group", "dim", "sample_size", "rep", "seconds", "status"]
    assert len(rows) == 2 * 2 * 2
    for row in rows:
        assert row[5] == "ok"
        assert float(row[4]) >= 0.0


def test_timebench_timeout_leaves_seconds_empty(tmp_path):
    out = tmp_path / "t.csv"
    code = _run("timebench", "--groups", "ela_level", "--dims", "3",
                "--reps", 1, "--size", 60, "--budget-seconds", "1e-9", "--out", out)
    assert code == 0
    _, _, rows = _read_output(out)
    assert rows[0][4] == ""
    assert rows[0][5] == "timeout"


# -- config file resolution ------------------------------------------------------------

def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"fid": 4, "size": 30, "dim": 2}))
    out = tmp_path / "d.csv"
    code = _run("sample", "--config", cfg_file, "--size", 20, "--out", out)
    assert code == 0
    resolved = json.loads((tmp_path / "d.csv.config.json").read_text())
    assert resolved["fid"] == 4      # from the file
    assert resolved["size"] == 20    # flag wins over the file
    assert resolved["dim"] == 2
    _, _, rows = _read_output(out)
    assert len(rows) == 20


def test_config_file_errors(tmp_path):
    unknown = tmp_path / "u.json"
    unknown.write_text(json.dumps({"not_a_key": 1}))
    assert _run("sample", "--config", unknown, "--out", tmp_path / "d.csv") == 2
    broken = tmp_path / "b.json"
    broken.write_text("{nope")
    assert _run("sample", "--config", broken, "--out", tmp_path / "d.csv") == 2
    assert _run("sample", "--config", tmp_path / "missing.json",
                "--out", tmp_path / "d.csv") == 2


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    assert _run("sample", "--dim", 2, "--size", 10, "--out", "rel.csv") == 0
    assert (tmp_path / "rel.csv").exists()
    assert (tmp_path / "rel.csv.config.json").exists()
    absolute = tmp_path / "abs.csv"
    assert _run("sample", "--dim", 2, "--size", 10, "--out", absolute) == 0
    assert absolute.exists()


# -- classification commands (wiring tested against a stub dataset) ---------------------

def _stub_dataset(*args, **kwargs):
    fids = np.repeat([1, 2, 3, 4], 2)
    label = np.where(fids <= 2, "low", "high")
    return harness.Dataset(
        matrix=np.column_stack([(label == "high").astype(float), np.tile([0.0, 1.0], 4)]),
        feature_names=("leak", "noise"),
        function_ids=fids,
        instance_seeds=np.tile([1, 2], 4),
        labels={prop: label for prop in testbed.PROPERTY_NAMES},
        feature_set="C7-D2",
        dimension=5,
    )


def test_classify_schema_and_importance(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "assemble_dataset", _stub_dataset)
    out = tmp_path / "cv.csv"
    imp = tmp_path / "imp.csv"
    code = _run("classify", "--set", "C7-D2", "--dim", 5, "--task", "multimodality",
                "--cv", "lopo", "--trees", 10, "--out", out, "--importance-out", imp)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["task", "feature_set", "dim", "fold", "accuracy"]
    assert len(rows) == 4
    for row in rows:
        assert row[0] == "multimodality"
        assert row[1] == "C7-D2"
        assert row[2] == "5"
        assert float(row[4]) == 1.0
    _, iheader, irows = _read_output(imp)
    assert iheader == ["feature", "avg_rank"]
    assert [r[0] for r in irows] == ["leak", "noise"]  # sorted by (rank, name)
    assert float(irows[0][1]) <= float(irows[1][1])


def test_importance_command(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "assemble_dataset", _stub_dataset)
    out = tmp_path / "imp.csv"
    code = _run("importance", "--set", "C7-D2", "--dim", 5, "--task", "basin_size",
                "--cv", "loio", "--trees", 10, "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["feature", "avg_rank"]
    assert len(rows) == 2


def test_classify_rejects_bad_task_and_set(tmp_path):
    assert _run("classify", "--set", "C7-D2", "--task", "nope",
                "--out", tmp_path / "c.csv") == 2
    assert _run("classify", "--set", "mystery", "--task", "multimodality",
                "--out", tmp_path / "c.csv") == 2


def test_sweepm_wide_table_with_na_cells(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "assemble_dataset", _stub_dataset)
    out = tmp_path / "sweep.csv"
    code = _run("sweepm", "--set", "C7-D2", "--dims", "3,5", "--m-values", "2,3,4",
                "--task", "multimodality", "--trees", 10, "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["dim", "m2", "m3", "m4"]
    assert rows[0][0] == "3"
    assert rows[0][2] == "Na" and rows[0][3] == "Na"  # m >= dim
    assert float(rows[0][1]) == 1.0
    assert rows[1][1] != "Na" and rows[1][2] != "Na"


def test_sweepm_requires_reduced_feature_set(tmp_path):
    assert _run("sweepm", "--set", "C7", "--dims", "3", "--m-values", "2",
                "--task", "multimodality", "--out", tmp_path / "s.csv") == 2


def test_budget_exhaustion_exit_code(tmp_path):
    code = _run("classify", "--set", "C7-D2", "--dim", 3, "--size", 60,
                "--task", "multimodality", "--budget-seconds", "1e-9",
                "--out", tmp_path / "cv.csv")
    assert code == 3


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def explode(*args, **kwargs):
        raise np.linalg.LinAlgError("synthetic blow-up")

    monkeypatch.setattr(harness, "assemble_dataset", explode)
    code = _run("classify", "--set", "C7-D2", "--task", "multimodality",
                "--out", tmp_path / "cv.csv")
    assert code == 4


# -- similarity ---------------------------------------------------------------------

def test_similarity_command(tmp_path):
    out = tmp_path / "sim.csv"
    code = _run("similarity", "--dim", 3, "--m", 2, "--groups", "ela_distr",
                "--size", 50, "--out", out)
    assert code == 0
    _, header, rows = _read_output(out)
    assert header == ["feature", "tau", "n_functions"]
    by_name = {row[0]: row for row in rows}
    assert float(by_name["ela_distr.skewness"][1]) == 1.0  # y is bit-identical
    assert all(int(row[2]) == 13 for row in rows)
    for row in rows:
        assert -1.0 <= float(row[1]) <= 1.0


# -- suite -------------------------------------------------------------------------

def test_suite_list_manifest(tmp_path, capsys):
    assert _run("suite", "list") == 0
    manifest = json.loads(capsys.readouterr().out)
    assert len(manifest) == 13
    for row in manifest:
        assert set(row) == {"function_id", "name", "category", "labels"}
        assert set(row["labels"]) == set(testbed.PROPERTY_NAMES)
    out = tmp_path / "suite.json"
    assert _run("suite", "list", "--out", out) == 0
    assert json.loads(out.read_text()) == manifest


def test_suite_labels_csv(tmp_path):
    out = tmp_path / "labels.csv"
    assert _run("suite", "labels", "--format", "csv", "--out", out) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["function_id", "name", "category", *testbed.PROPERTY_NAMES]
    assert len(rows) == 14
    assert rows[1][0] == "1"


# -- process-level wiring -------------------------------------------------------------

def test_module_invocation_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "elakit", "suite", "labels", "--format", "csv"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("function_id,name,category,")
