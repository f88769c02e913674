import json
import subprocess
import sys

import numpy as np
import pytest

from mom.cli import main
from mom.formats import load_instance, load_pseudoranges


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "3", "3", "2")
    assert code == 0
    assert json.loads(out) == {"m": 3, "n": 3, "dim": 2, "excess": 0, "kind": "minimal"}
    code, out, _ = run(capsys, "classify", "2", "3", "2")
    assert json.loads(out)["kind"] == "underdetermined"


def test_error_json_on_stderr(capsys):
    code, out, err = run(capsys, "classify", "3", "3", "7")
    assert code != 0 and out == ""
    payload = json.loads(err)
    assert payload["error"] == "ParameterError"


def test_parse_error_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("transmitter_id,x,y\n0,1,2\n1,oops,3\n")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 1
    payload = json.loads(err)
    assert payload["error"] == "ParseError" and payload["line"] == 3
    code, _, err = run(capsys, "pipeline", str(tmp_path / "missing.csv"))
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"


def test_generate_and_solve(capsys, tmp_path):
    csv_path, truth = tmp_path / "f.csv", tmp_path / "t.json"
    code, _, _ = run(capsys, "generate", "--config", "3r4s2d", "--seed", "4",
                     "--out", str(csv_path), "--truth", str(truth))
    assert code == 0
    f, inst = load_pseudoranges(csv_path), load_instance(truth)
    assert (f.m, f.n, f.dim) == (3, 4, 2)
    code, out, _ = run(capsys, "solve", str(csv_path))
    res = json.loads(out)
    assert res["kind"] == "subminimal"
    np.testing.assert_allclose(res["solution"]["receivers"], inst.receivers, atol=1e-6)

    run(capsys, "generate", "-m", "3", "-n", "3", "--dim", "2", "--seed", "1", "--out", str(csv_path))
    code, out, _ = run(capsys, "solve", str(csv_path))
    res = json.loads(out)
    assert res["kind"] == "minimal" and res["total_solutions"] == 28
    assert len(res["candidates"]) >= 1

    run(capsys, "generate", "-m", "2", "-n", "2", "--out", str(csv_path))
    code, _, err = run(capsys, "solve", str(csv_path))
    assert code == 1 and "underdetermined" in json.loads(err)["message"]


def test_bench_counts_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, out, _ = run(capsys, "bench", "counts", "--config", "2r4s2d", "--trials", "2",
                           "--seed", "7", "--out", str(path), "--no-timing")
        assert code == 0
        assert "2r4s2d" in out  # summary table
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "config,total_mode,real_min,real_avg,real_max,mean_time_s"


def test_bench_noise_json(capsys):
    code, out, _ = run(capsys, "bench", "noise", "--config", "3r4s2d", "--trials", "2",
                       "--sigma-grid", "0,1e-3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert [r["sigma"] for r in data["aggregates"]["per_sigma"]] == [0.0, 1e-3]


def test_bad_sigma_grid_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "noise", "--sigma-grid", "a,b"])
    assert exc.value.code == 2


def test_pipeline_command(capsys, tmp_path):
    csv_path, truth = tmp_path / "f.csv", tmp_path / "t.json"
    run(capsys, "generate", "-m", "6", "-n", "9", "--dim", "3", "--room", "--seed", "2",
        "--out", str(csv_path), "--truth", str(truth))
    code, out, _ = run(capsys, "pipeline", str(csv_path), "--truth", str(truth),
                       "--restarts", "1", "--format", "json")
    assert code == 0
    agg = json.loads(out)["aggregates"]
    assert agg["mean_receiver_error"] < 1e-6


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mom.cli", "classify", "4", "4", "3"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["excess"] == 0
