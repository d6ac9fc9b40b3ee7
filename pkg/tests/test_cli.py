import csv
import json
import subprocess
import sys

import pytest

from stable_she.cli import CSV_COLUMNS, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, main


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_rows(out):
    with open(out / "results.csv", newline="") as fh:
        return list(csv.reader(fh))


def test_zero_test_function_gives_zero_gap(tmp_path, capsys):
    doc = {"experiment": "duality-gap", "seed": 3, "replicas": 50, "psi": {"mass": 0.0}}
    out = tmp_path / "gap"
    assert main(["--config", write_config(tmp_path, doc), "--out", str(out)]) == EXIT_OK
    rows = read_rows(out)
    assert rows[0] == CSV_COLUMNS["duality-gap"]
    assert [r[0] for r in rows[1:]] == ["4", "16", "64"]
    for r in rows[1:]:
        assert float(r[5]) == 0.0 and r[-1] == "true"
    assert "PASS gap_n=64" in capsys.readouterr().out


def test_noise_check_schema_and_manifest(tmp_path):
    doc = {"experiment": "noise-check", "seed": 2, "replicas": 3000, "noise": {"eps": 0.01}}
    out = tmp_path / "noise"
    code = main(["--config", write_config(tmp_path, doc), "--out", str(out)])
    rows = read_rows(out)
    assert rows[0] == ["lambda", "empirical", "target", "se", "bias_bound", "pass"]
    assert len(rows) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 2 and manifest["config"]["noise"]["eps"] == 0.01
    assert {"library_version", "wall_time_s", "streams", "assertions"} <= set(manifest)
    assert manifest["passed"] == (code == EXIT_OK)


def test_failed_assertion_exit_code(tmp_path, capsys):
    # a badly mis-scaled dual clock with no allowance cannot match the noise side
    doc = {"experiment": "duality-gap", "seed": 2, "replicas": 100, "n_list": [4],
           "model": {"dual_scale": 0.05}, "allowance": {"gap": 0.0}}
    assert main(["--config", write_config(tmp_path, doc), "--out", str(tmp_path / "o")]) == EXIT_FAIL
    assert "FAIL gap_n=4" in capsys.readouterr().out


@pytest.mark.parametrize(
    "doc",
    [{"experiment": "she-mean", "model": {"alpha": 1.2, "beta": 0.7}}, {"experiment": "nope"}, {"experiment": "she-mean", "x": 1}],
)
def test_config_error_exit_code(tmp_path, capsys, doc):
    assert main(["--config", write_config(tmp_path, doc)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_bad_worker_count(tmp_path):
    assert main(["--config", write_config(tmp_path, {"experiment": "gronwall"}), "--workers", "0"]) == EXIT_CONFIG


def test_runtime_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    cfg = write_config(tmp_path, {"experiment": "gronwall"})
    assert main(["--config", cfg, "--out", str(blocker / "sub")]) == EXIT_RUNTIME


def test_flag_overrides_reach_the_manifest(tmp_path):
    out = tmp_path / "g"
    cfg = write_config(tmp_path, {"experiment": "gronwall", "seed": 1})
    assert main(["--config", cfg, "--out", str(out), "--seed", "12", "--replicas", "7"]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 12 and manifest["config"]["replicas"] == 7
    assert manifest["config"]["out"] == str(out)


@pytest.mark.parametrize("launcher", [["stable-she"], [sys.executable, "-m", "stable_she"]])
def test_console_entry_points(tmp_path, launcher):
    cfg = write_config(tmp_path, {"experiment": "gronwall"})
    proc = subprocess.run([*launcher, "--config", cfg, "--out", str(tmp_path / "r")], capture_output=True, text=True)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert proc.stdout.count("PASS gronwall") == 9
