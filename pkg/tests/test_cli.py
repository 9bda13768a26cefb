"""Front-end behavior: JSON output, artifact files, determinism, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

import spinmix as sm
from spinmix.cli import main


def run_cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "spinmix.cli", *argv],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def test_slider_published_values():
    code, out, _ = run_cli("slider", "--n-sites", "5", "--d", "2", "--beta", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["one_minus_p"] == pytest.approx(0.571832, abs=1e-6)
    assert (payload["k"], payload["n"], payload["m"]) == (2, 4, 32)
    # at least 12 significant digits survive the round trip
    assert abs(payload["one_minus_p"] - 2635 / 4608) < 1e-12

    code, out, _ = run_cli("slider", "--n-sites", "5", "--d", "2", "--beta", "2")
    assert json.loads(out)["one_minus_p"] == pytest.approx(0.639375, abs=1e-6)

    code, out, _ = run_cli("slider", "--n-sites", "3", "--d", "2", "--beta", "1")
    assert json.loads(out)["one_minus_p"] == pytest.approx(175 / 216, abs=1e-12)


def test_slider_usage_errors():
    assert run_cli("slider", "--n-sites", "2", "--d", "2")[0] == 2
    assert run_cli("slider", "--d", "2")[0] == 2
    assert run_cli("nonsense")[0] == 2


def _run_args(out_dir, seed=9, trials=2500):
    return ["run", "--ensemble", "pm1", "--n-sites", "3", "--d", "2",
            "--trials", str(trials), "--seed", str(seed),
            "--edges", "-2.5,-1.5,-0.5,0.5,1.5,2.5", "--out", str(out_dir)]


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "runA"
    assert main(_run_args(out)) == 0
    for name in ("densities.csv", "moments.csv", "summary.json"):
        assert (out / name).exists()

    lines = (out / "densities.csv").read_text().strip().splitlines()
    assert lines[0] == "source,bin_left,bin_right,mass"
    body = [ln.split(",") for ln in lines[1:]]
    sources = {row[0] for row in body}
    assert sources == {"classical", "iso", "quantum", "ie", "gram_charlier"}
    for source in sources:
        mass = sum(float(row[3]) for row in body if row[0] == source)
        assert abs(mass - 1.0) < 1e-9

    # the classical end of a ±1 chain occupies exactly three bins
    cls = [float(row[3]) for row in body if row[0] == "classical"]
    assert sum(m > 0 for m in cls) == 3

    summary = json.loads((out / "summary.json").read_text())
    assert summary["p_analytic"] == pytest.approx(41 / 216, rel=1e-12)
    assert set(summary["ks"]) == {"classical_vs_quantum", "iso_vs_quantum",
                                  "ie_vs_quantum", "gram_charlier_vs_quantum"}


def test_run_matches_slider_exactly(tmp_path):
    out = tmp_path / "runB"
    assert main(_run_args(out)) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["p_analytic"] == sm.slider_p(3, 2, 1).p


def test_run_deterministic_csv(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(_run_args(out1)) == 0
    assert main(_run_args(out2)) == 0
    for name in ("densities.csv", "moments.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    out3 = tmp_path / "r3"
    assert main(_run_args(out3, seed=10)) == 0
    assert (out1 / "densities.csv").read_bytes() != (out3 / "densities.csv").read_bytes()


def test_run_usage_errors(tmp_path):
    args = _run_args(tmp_path / "x")
    args[2] = "wishart"  # wishart without --rank
    assert main(args) == 2
    assert main(["run", "--ensemble", "pm1", "--n-sites", "13", "--d", "2",
                 "--trials", "10", "--out", str(tmp_path / "y")]) == 2  # cap


def test_run_beyond_nearest_neighbor(tmp_path):
    out = tmp_path / "L3"
    code = main(["run", "--ensemble", "wishart", "--rank", "8", "--n-sites", "4",
                 "--d", "2", "--range", "3", "--trials", "300", "--seed", "3",
                 "--bins", "24", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["p_analytic"] is None  # all-isotropic regime, no mixture weight
    lines = (out / "densities.csv").read_text().strip().splitlines()[1:]
    ie = [ln.split(",")[3] for ln in lines if ln.startswith("ie,")]
    iso = [ln.split(",")[3] for ln in lines if ln.startswith("iso,")]
    assert ie == iso


def test_reproduce_theory_only():
    code, out, _ = run_cli("reproduce", "N5", "--trials", "0")
    assert code == 0
    assert "16.000000" in out and "80.000000" in out and "0.716" in out
    assert "0.087" in out and "0.255" in out and "0.480000" in out


def test_reproduce_theory_only_n9():
    code, out, _ = run_cli("reproduce", "N9", "--trials", "0")
    assert code == 0
    for value in ("-0.164", "0.108", "0.240000"):
        assert value in out


def test_reproduce_small_run_passes():
    code, out, _ = run_cli("reproduce", "N3", "--trials", "8000", "--seed", "2")
    assert code == 0, out
