import csv
import filecmp
import json

import pytest

from bridgesim.cli import main

SMALL = """
[topology]
kind = two-cluster
nodes_per_cluster = 3 3
[schedule]
warmup = 40
eval_duration = 60
[evaluation]
rules = none simple-majority
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def _rows(path):
    return list(csv.DictReader(ln for ln in path.read_text().splitlines() if not ln.startswith("#")))


def test_analyze(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text("nodes 5\n0 1\n1 2\n2 0\n2 3 150\n3 4\n")
    assert main(["analyze", str(g)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "bridges: 2-3 3-4"
    assert out[1] == "articulation: 2 3"
    assert main(["analyze", str(g), "--etx-threshold", "100"]) == 0
    assert "components: 2" in capsys.readouterr().out
    g.write_text("nodes 2\n0 7\n")
    assert main(["analyze", str(g)]) == 2


def test_simulate_evaluate(tmp_path, cfg_file, capsys):
    run = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg_file), "--seed", "3", "--out", str(run)]) == 0
    meta = json.loads((run / "stats.json").read_text())
    assert meta["seed"] == 3 and meta["header"].startswith("# bridgesim")
    assert (run / "snapshots.csv").read_text().startswith("# bridgesim 0.1.0 seed=3 config=")
    assert main(["evaluate", str(run), "--rule", "none", "--rule", "simple-majority"]) == 0
    rows = _rows(run / "scores.csv")
    assert {r["scope"] for r in rows} == {f"{k}:etx={t}:{r}" for k in ("bridge", "articulation")
                                          for t in (10, 100) for r in ("none", "simple-majority")}
    assert all(0 <= float(r["f1"]) <= 1 for r in rows)


def test_simulate_is_byte_identical(tmp_path, cfg_file):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--config", str(cfg_file), "--seed", "8", "--out", str(d), "--events"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert "events.log" in names
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors


def test_evaluate_missing_files(tmp_path, capsys):
    assert main(["evaluate", str(tmp_path)]) == 1
    assert "missing" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[protocol]\ninitial_ttl = x\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_sweep_evaluation_parameter_reuses_runs(tmp_path, cfg_file):
    text = cfg_file.read_text() + "[sweep]\nparameter = evaluation.etx_thresholds\nvalues = 10 100\nname = th\n"
    cfg_file.write_text(text)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg_file), "--out", str(out), "--repetitions", "3"]) == 0
    rows = _rows(out / "th_summary.csv")
    assert list(rows[0]) == ["param_value", "metric", "mean", "ci_halfwidth", "n"]
    assert {r["param_value"] for r in rows} == {"10", "100"}
    assert all(r["n"] == "3" for r in rows)
    assert (out / "th.dat").read_text().startswith("# bridgesim")


def test_sweep_reports_partial_failure(tmp_path, cfg_file):
    text = cfg_file.read_text() + "[sweep]\nparameter = topology.radius\nvalues = 230 100\nrepetitions = 2\n"
    cfg_file.write_text(text)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg_file), "--out", str(out), "--jobs", "2"]) == 1
    rows = _rows(out / "sweep_summary.csv")
    assert {r["param_value"] for r in rows} == {"230"}


def test_baseline_on_lossy_channel_is_a_usage_error(tmp_path, capsys):
    p = tmp_path / "b.ini"
    p.write_text("[run]\nalgorithm = chaudhuri\n[topology]\nkind = line\nn = 4\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "lossless" in capsys.readouterr().err
