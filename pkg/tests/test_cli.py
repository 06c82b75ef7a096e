import csv
import json
import subprocess
import sys

import pytest

from ggh.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_RUN, main

FAST = {"epochs": 5, "patience": None}


def _cfg(tmp_path, name="exp.json", **kw):
    d = {"dataset": "synthetic:hypothesis", "missing_rate": 0.9, "synthetic_rows": 150,
         "runs": 1, "ggh": FAST}
    d.update(kw)
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def _noise_cfg(tmp_path):
    return _cfg(tmp_path, "noise.json", dataset="synthetic:noise", missing_rate=None,
                noise_fraction=0.3, warmup_epochs=5, extra_epochs=3)


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_simulate_impute(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", _cfg(tmp_path), "--out-dir", str(out)]) == EXIT_OK
    assert _header(out / "truth.csv") == ["row_id", "c"]
    assert (out / "simulated.csv").exists() and (out / "plan.json").exists()
    assert "np.float64" not in (out / "truth.csv").read_text()


def test_simulate_noise(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", _noise_cfg(tmp_path), "--out-dir", str(out)]) == EXIT_OK
    assert _header(out / "truth.csv") == ["row_id", "clean_y", "noisy"]


def test_impute_train_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["impute-train", "--config", _cfg(tmp_path), "--out-dir", str(out)]) == EXIT_OK
    assert _header(out / "report.csv") == ["method", "metric", "mean", "std", "n_runs"]
    rep = json.loads((out / "report.json").read_text())
    assert "ggh" in rep["methods"]
    assert (out / "history.csv").exists()
    assert "| ggh |" in capsys.readouterr().out


def test_seed_and_runs_override(tmp_path):
    out = tmp_path / "o"
    cfg = _cfg(tmp_path, methods=["complete-columns"])
    assert main(["impute-train", "--config", cfg, "--seed", "5", "--runs", "2",
                 "--out-dir", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert [r["seed"] for r in rep["runs"]] == [5, 6]


def test_baseline_roster(tmp_path):
    out = tmp_path / "o"
    assert main(["baseline", "--config", _cfg(tmp_path), "--out-dir", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert "impute:softimpute" in rep["methods"] and "ggh" not in rep["methods"]
    assert any("mice" in n for n in rep["notes"])


def test_noise_filter_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["noise-filter", "--config", _noise_cfg(tmp_path), "--out-dir", str(out)]) == EXIT_OK
    assert _header(out / "verdict.csv")[:3] == ["row_id", "stage1_label", "final_label"]
    assert set(json.loads((out / "confusion.json").read_text())) >= {"tp", "fp", "precision"}


def test_export_embeddings_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["export-embeddings", "--config", _cfg(tmp_path), "--bins", "5",
                 "--out-dir", str(out)]) == EXIT_OK
    assert _header(out / "embeddings.csv") == ["x", "y", "row_id", "class_id", "label", "density"]
    with open(out / "histogram.csv") as fh:
        assert len(fh.read().splitlines()) == 6
    assert set(json.loads((out / "tightness.json").read_text())) == {"correct", "incorrect", "ground"}


def test_report_renders_saved_json(tmp_path, capsys):
    out = tmp_path / "o"
    main(["impute-train", "--config", _cfg(tmp_path, methods=["complete-columns"]),
          "--out-dir", str(out)])
    capsys.readouterr()
    assert main(["report", str(out / "report.json")]) == EXIT_OK
    assert "| complete-columns |" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["impute-train"],
    ["impute-train", "--config", "/nonexistent.json"],
])
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_wrong_mode_exit_1(tmp_path):
    assert main(["noise-filter", "--config", _cfg(tmp_path), "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_bad_runs_exit_1(tmp_path):
    assert main(["impute-train", "--config", _cfg(tmp_path), "--runs", "0",
                 "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_data_errors_exit_2(tmp_path):
    cfg = _cfg(tmp_path, dataset=str(tmp_path / "none.csv"), masked_column="a", target="y")
    assert main(["impute-train", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_DATA
    assert main(["report", str(tmp_path / "missing.json")]) == EXIT_DATA


def test_all_runs_failing_exit_3(tmp_path):
    cfg = _cfg(tmp_path, missing_rate=1.0, methods=["complete-columns"])
    assert main(["impute-train", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_RUN


def test_console_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ggh.cli", "report", str(tmp_path / "x.json")],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_DATA
    assert "data error" in r.stderr
