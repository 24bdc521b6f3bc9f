import csv
import json

import pytest

from ghtorus.cli import main

from conftest import CONFIGS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_json_and_files(capsys, tmp_path):
    code, out, _ = run(capsys, "classify", CONFIGS / "half_slope.json", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["outcome"] == "NOT_GH"
    assert (tmp_path / "verdict.json").read_text() == out
    assert (tmp_path / "witness.csv").exists()


def test_classify_gh_writes_scan(capsys, tmp_path):
    code, out, _ = run(capsys, "classify", CONFIGS / "parity_pair.json", "--out", tmp_path, "--format", "text")
    assert code == 0
    assert "outcome:   GH" in out
    assert {"verdict.json", "scan.csv"} <= {p.name for p in tmp_path.iterdir()}


def test_classify_xi_max_override(capsys):
    code, out, _ = run(capsys, "classify", CONFIGS / "parity_pair.json", "--xi-max", 32)
    assert code == 0
    assert json.loads(out)["window"]["xiMax"] == 32


def test_gw_scan_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "gw-scan", CONFIGS / "parity_pair.json", "--format", "csv", "--xi-max", 16,
                       "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 33
    assert min(float(r["min_over_tau"]) for r in rows if r["xi"] != "0") == 1.0
    assert (tmp_path / "scan.json").exists()


def test_dio_profile(capsys):
    code, out, _ = run(capsys, "dio", "liouville(6)", "--depth", 40)
    assert code == 0
    assert json.loads(out)["liouvilleTrend"] is True


def test_dio_simultaneous(capsys):
    code, out, _ = run(capsys, "dio", "sqrt(2)", "sqrt(3)", "--eta", 1, "--q-budget", "1e12", "--format", "text")
    assert code == 0
    assert "SDA_FAILED_TREND" in out


def test_solve_reports_small_residual(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", CONFIGS / "bump_hormander.json", "cos(t) + 1j*sin(2*t)/(1 + xi**2)",
                       "--xi-max", 2, "--grid", 2048, "--out", tmp_path)
    assert code == 0
    payload = json.loads(out)
    assert payload["maxResidual"] <= 10 * 1e-10
    assert {r["status"] for r in payload["rows"]} == {"SOLVED"}
    assert (tmp_path / "solve.csv").exists()


def test_solve_flags_under_resolved_coefficient(capsys):
    code, out, _ = run(capsys, "solve", CONFIGS / "bump_hormander.json", "cos(t)", "--xi-max", 2, "--grid", 256)
    assert code == 0
    assert all("UNDER_RESOLVED" in r["tags"] for r in json.loads(out)["rows"])


def test_solve_lists_resonant_modes(capsys):
    code, out, _ = run(capsys, "solve", CONFIGS / "half_slope.json", "1 + 0*t", "--xi-max", 4)
    assert code == 0
    status = {r["xi"][0]: r["status"] for r in json.loads(out)["rows"]}
    assert status[2] == "RESONANT" and status[1] == "SOLVED"


def test_reduce_text(capsys):
    code, out, _ = run(capsys, "reduce", CONFIGS / "bump_hormander.json", "--format", "text")
    assert code == 0
    assert "inH=True inL=False" in out
    assert "map FORWARD" in out


def test_witness_kernel(capsys, tmp_path):
    code, out, _ = run(capsys, "witness", CONFIGS / "half_slope.json", "--out", tmp_path)
    assert code == 0
    payload = json.loads(out)
    assert payload["construction"] == "KERNEL_WITNESS"
    assert payload["invariantFailures"] == []
    assert (tmp_path / "witness.csv").exists()


def test_witness_missing_for_gh_system(capsys):
    code, _, err = run(capsys, "witness", CONFIGS / "parity_pair.json")
    assert code == 1
    assert "NoWitness" in err


@pytest.mark.parametrize("argv", [
    ["classify", "does-not-exist.json"],
    ["dio", "not a number ("],
    ["solve", str(CONFIGS / "half_slope.json"), "1", "--operator", "5"],
])
def test_validation_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_invalid_config_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 1, "N": 1, "coeffs": [{"const": 1}], "symbols": []}))
    code, _, err = run(capsys, "classify", bad)
    assert code == 2
    assert "invalid input" in err


def test_budget_exhaustion_exits_3(capsys):
    code, _, err = run(capsys, "dio", "sqrt(2)", "--depth", 100000)
    assert code == 3
    assert "budget" in err
