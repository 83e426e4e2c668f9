import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from delaystab import __version__
from delaystab.cli import main

OMEGA = 0.5671432904097838


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


def test_version(runner):
    r = run(runner, "--version")
    assert r.exit_code == 0 and __version__ in r.output


class TestRoots:
    def test_omega(self, runner):
        r = run(runner, "roots", "--kappa", "1", "--tau", "1", "--count", "3")
        assert r.exit_code == 0
        rs = json.loads(r.output)
        assert len(rs) == 3 and abs(rs[0]["re"] - OMEGA) < 1e-12
        assert rs[1]["im"] == -rs[2]["im"]
        assert all(x["flag"] == "ok" for x in rs)

    def test_bad_tau(self, runner):
        r = run(runner, "roots", "--kappa", "1", "--tau", "0")
        assert r.exit_code == 2 and "tau must be positive" in r.output


class TestSpectrum:
    def test_scalar(self, runner):
        r = run(runner, "spectrum", "--mu", "0", "--kappa", "1", "--tau", "1", "--count", "3")
        d = json.loads(r.output)
        assert r.exit_code == 0 and d["max_abs_error"] < 1e-3
        assert abs(d["lifted"][0]["re"] - OMEGA) < 1e-6

    def test_mu_needs_delay_parameters(self, runner):
        r = run(runner, "spectrum", "--mu", "0")
        assert r.exit_code == 2

    def test_localized_rejected(self, runner):
        r = run(runner, "spectrum", "--scenario", "localized_two_phase")
        assert r.exit_code == 1 and "scalar delay" in r.output


class TestSynthesize:
    def test_law_written(self, runner, tmp_path):
        out = tmp_path / "law.json"
        r = run(runner, "synthesize", "--alpha", "2", "--output", str(out))
        assert r.exit_code == 0
        d = json.loads(out.read_text())
        assert d == json.loads(r.output)
        assert d["alpha"] == 2.0 and d["unstable_modes"]
        assert d["certificates"]["placement_abscissa"] <= d["certificates"]["placement_bound"]

    def test_broken_reports_mode(self, runner):
        r = run(runner, "synthesize", "--scenario", "broken_hautus", "--alpha", "1")
        assert r.exit_code == 1 and "mode 0" in r.output

    def test_invalid_scenario(self, runner, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text(yaml.safe_dump({"system": {"tau": -1.0, "wrong": 1}}))
        r = run(runner, "synthesize", "--scenario", str(p), "--alpha", "1")
        assert r.exit_code == 1
        assert "tau must be positive" in r.output and "'wrong'" in r.output


class TestSimulate:
    def test_csv_to_stdout(self, runner):
        r = runner.invoke(main, ["simulate", "--alpha", "2", "--horizon", "1"])
        assert r.exit_code == 0
        lines = r.stdout.strip().splitlines()
        assert lines[0] == "t,state_norm,control_norm"
        assert len(lines) == 1 + 1001
        rep = json.loads(r.stderr)
        assert set(rep) >= {"alpha", "alpha_hat", "C_hat", "pass"}

    def test_with_saved_law(self, runner, tmp_path):
        law = tmp_path / "law.json"
        run(runner, "synthesize", "--alpha", "2", "--output", str(law))
        out = tmp_path / "traj.csv"
        r = run(runner, "simulate", "--law", str(law), "--csv", str(out))
        rep = json.loads(r.output)
        assert r.exit_code == 0 and rep["pass"] and rep["alpha_hat"] >= 1.9
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape[1] == 3 and data[0, 0] == 0.0


class TestVerify:
    def test_benchmark_passes(self, runner, tmp_path):
        r = run(runner, "verify", "benchmark_interior", "--output-dir", str(tmp_path))
        assert r.exit_code == 0
        assert "aggregate: PASS" in r.output
        assert (tmp_path / "benchmark_interior_report.json").is_file()
        assert (tmp_path / "benchmark_interior_alpha8.csv").is_file()

    def test_broken_fails(self, runner, tmp_path):
        r = run(runner, "verify", "broken_hautus", "--output-dir", str(tmp_path), "--quiet")
        assert r.exit_code == 1 and r.output == ""
        d = json.loads((tmp_path / "broken_hautus_report.json").read_text())
        assert d["pass"] is False
        assert [x["witness_mode"] for x in d["results"]] == [0, 0]

    def test_env_directory(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("DELAYSTAB_OUTPUT_DIR", str(tmp_path / "env"))
        r = run(runner, "verify", "localized_two_phase", "--quiet")
        assert r.exit_code == 0
        assert (tmp_path / "env" / "localized_two_phase_summary.txt").is_file()

    def test_unknown_scenario(self, runner):
        r = run(runner, "verify", "nothing_here")
        assert r.exit_code == 1 and "no bundled scenario" in r.output


class TestReport:
    def test_round_trip(self, runner, tmp_path):
        run(runner, "verify", "neumann_boundary", "--output-dir", str(tmp_path), "--quiet")
        r = run(runner, "report", str(tmp_path / "neumann_boundary_report.json"))
        assert r.exit_code == 0 and "aggregate: PASS" in r.output

    def test_failing_report(self, runner, tmp_path):
        run(runner, "verify", "broken_hautus", "--output-dir", str(tmp_path), "--quiet")
        r = run(runner, "report", str(tmp_path / "broken_hautus_report.json"))
        assert r.exit_code == 1 and "aggregate: FAIL" in r.output

    def test_not_a_report(self, runner, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("[1, 2]")
        r = run(runner, "report", str(p))
        assert r.exit_code == 1 and "not a run report" in r.output
