"""Command-line interface: exit codes, artifacts, config handling."""

import hashlib
import json
import os

import numpy as np

from kpwaves import cli, grids


def _run(argv):
    return cli.main(argv)


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_solve_writes_artifacts_and_manifest(tmp_path):
    out = str(tmp_path / "run")
    code = _run(["solve", "--grid", "64", "--box", "20", "--p", "1",
                 "--out-dir", out, "--name", "wave",
                 "--residual-target", "1e-6"])
    assert code == 0
    for name in ("wave.json", "wave.f64", "wave_history.csv",
                 "wave_summary.json", "manifest.json"):
        assert os.path.exists(os.path.join(out, name)), name
    manifest = _read_json(os.path.join(out, "manifest.json"))
    listed = {e["path"]: e["sha256"] for e in manifest["artifacts"]}
    assert "manifest.json" not in listed
    for name, digest in listed.items():
        with open(os.path.join(out, name), "rb") as fh:
            assert hashlib.sha256(fh.read()).hexdigest() == digest
    summary = _read_json(os.path.join(out, "wave_summary.json"))
    assert summary["converged"]
    assert summary["residual_conv"] < 1e-6
    # stored field round-trips bit-identically
    field, meta = grids.load_field(os.path.join(out, "wave"))
    field2, _ = grids.load_field(os.path.join(out, "wave"))
    assert np.array_equal(field.values, field2.values)
    assert meta["p_num"] == 1 and meta["p_den"] == 1


def test_verify_on_solved_wave(tmp_path):
    out = str(tmp_path / "run")
    assert _run(["solve", "--grid", "128", "--box", "20", "--p", "1",
                 "--out-dir", out, "--residual-target", "1e-6"]) == 0
    code = _run(["verify", os.path.join(out, "wave"),
                 "--out-dir", str(tmp_path / "verify"),
                 "--tol-pohozaev", "0.1", "--tol-ratio", "0.1"])
    assert code == 0
    report = _read_json(str(tmp_path / "verify" / "verify_report.json"))
    assert "mass" in report and "residuals" in report
    checks = str(tmp_path / "verify" / "verify_checks.csv")
    with open(checks) as fh:
        rows = fh.read().splitlines()
    assert rows[0] == "name,value,expected,tolerance,pass"
    assert all(r.endswith("pass") for r in rows[1:])


def test_verify_rejects_missing_and_corrupt_files(tmp_path):
    assert _run(["verify", str(tmp_path / "nope"),
                 "--out-dir", str(tmp_path / "v")]) == 2


def test_supercritical_p_exits_2(tmp_path):
    assert _run(["solve", "--p", "4", "--grid", "64", "--box", "20",
                 "--out-dir", str(tmp_path / "x")]) == 2
    assert _run(["solve", "--p", "7/1", "--grid", "64", "--box", "20",
                 "--out-dir", str(tmp_path / "x")]) == 2
    # even-denominator exponents are malformed configs
    assert _run(["solve", "--p", "1/2", "--grid", "64", "--box", "20",
                 "--out-dir", str(tmp_path / "x")]) == 2


def test_config_file_defaults_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid = 64\nbox = 20\nresidual-target = 1e-6\n")
    out1 = str(tmp_path / "a")
    assert _run(["--config", str(cfg), "solve", "--out-dir", out1]) == 0
    meta = _read_json(os.path.join(out1, "wave.json"))
    assert meta["sizes"] == [64, 64]
    # explicit flags beat config values
    out2 = str(tmp_path / "b")
    assert _run(["--config", str(cfg), "solve", "--grid", "32",
                 "--out-dir", out2]) == 0
    meta2 = _read_json(os.path.join(out2, "wave.json"))
    assert meta2["sizes"] == [32, 32]


def test_bad_config_file_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("this line has no equals sign\n")
    assert _run(["--config", str(cfg), "solve",
                 "--out-dir", str(tmp_path / "x")]) == 2
    assert _run(["--config", str(tmp_path / "missing.cfg"), "solve",
                 "--out-dir", str(tmp_path / "x")]) == 2


def test_riesz_subcommand(tmp_path):
    out = str(tmp_path / "riesz")
    code = _run(["riesz", "--sigma", "0.6,0.8", "--out-dir", out])
    assert code == 0
    with open(os.path.join(out, "riesz_residuals.csv")) as fh:
        rows = fh.read().splitlines()
    assert rows[0] == "dim,axis,sigma1,sigma2,residual"
    assert len(rows) == 3  # two axes for one direction
    for row in rows[1:]:
        assert float(row.split(",")[-1]) < 1e-6


def test_kernel_points_table(tmp_path):
    out = str(tmp_path / "kernel")
    code = _run(["kernel", "--which", "K0", "--points", "6,3;8,-2",
                 "--out-dir", out])
    assert code == 0
    with open(os.path.join(out, "kernel_values.csv")) as fh:
        rows = fh.read().splitlines()
    assert rows[0] == "x1,x2,value"
    assert len(rows) == 3
    # 17 significant digits serialized
    val = rows[1].split(",")[-1]
    assert len(val.replace("-", "").replace(".", "").replace("e", "")
               .lstrip("0")) >= 15


def test_kernel_without_task_exits_2(tmp_path):
    assert _run(["kernel", "--out-dir", str(tmp_path / "k")]) == 2
