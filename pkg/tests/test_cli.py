"""Subprocess tests of the command-line contract, one or more per exit code."""

import json
import math
import xml.etree.ElementTree as ET

import pytest

from bifcurve.asymptotics import coeff_A
from bifcurve.timemap import read_curve_csv

SVG_NS = "{http://www.w3.org/2000/svg}"
PHASE_LOCKED = ["--spacing", "phase-locked", "--subdivisions", "3"]


def _json(proc):
    assert proc.stderr == "" or proc.returncode != 0, proc.stderr
    return json.loads(proc.stdout)


@pytest.fixture(scope="module")
def reaction_csv(tmp_path_factory):
    """Phase-locked osc-reaction sweep on [100, 100 + 32 pi], shared by fit tests."""
    import subprocess
    import sys

    out = tmp_path_factory.mktemp("sweep") / "reaction.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "bifcurve", "sweep", "--family", "osc-reaction", "--k", "2", "--m", "2",
         "--start", "100", "--stop", str(100 + 32 * math.pi), *PHASE_LOCKED, "--threads", "0", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


class TestEval:
    def test_linear_problem(self, run_cli):
        proc = run_cli("eval", "--family", "pure-power", "--k", "0", "--m", "1", "--alpha", "1")
        assert proc.returncode == 0
        rec = _json(proc)
        assert rec["lambda"] == pytest.approx(math.pi**2, rel=1e-9)
        assert rec["converged"] is True
        assert rec["problem"]["family"] == "pure-power"

    def test_osc_both_within_envelope(self, run_cli):
        rec = _json(run_cli("eval", "--family", "osc-both", "--alpha", "100"))
        lead = 8 * coeff_A(2, 2) ** 2 * 100.0**2
        assert abs(rec["lambda"] - lead) <= 1.1 * 8 * coeff_A(2, 2) * math.sqrt(math.pi) * 10.0

    def test_admissibility_exit(self, run_cli):
        proc = run_cli("eval", "--family", "osc-diffusion", "--n", "1", "--p", "0.01", "--alpha", "10")
        assert proc.returncode == 3
        assert "admissibility" in proc.stderr

    def test_quadrature_exit(self, run_cli):
        proc = run_cli("eval", "--family", "osc-both", "--alpha", "50", "--tol", "1e-16", "--abs-tol", "1e-300",
                       "--max-levels", "2")
        assert proc.returncode == 2
        assert json.loads(proc.stdout)["converged"] is False

    @pytest.mark.parametrize(
        "args",
        [
            ["eval", "--alpha", "1"],
            ["eval", "--family", "osc-both"],
            ["eval", "--family", "osc-both", "--alpha", "-2"],
            ["eval", "--family", "osc-both", "--alpha", "x"],
            ["eval", "--family", "heat", "--alpha", "1"],
            ["eval", "--family", "osc-both", "--alpha", "1", "--bogus"],
            ["frobnicate"],
            [],
        ],
    )
    def test_usage_errors(self, run_cli, args):
        proc = run_cli(*args)
        assert proc.returncode == 1
        assert proc.stderr


class TestConfig:
    def test_flags_override_config(self, run_cli, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# linear problem\nfamily = pure-power\nk = 0\nm = 1\nalpha = 3\ncount = 7\n")
        rec = _json(run_cli("eval", "--config", cfg))
        assert rec["alpha"] == 3.0 and rec["lambda"] == pytest.approx(math.pi**2, rel=1e-9)
        rec = _json(run_cli("eval", "--config", cfg, "--family", "pure-power", "--k", "2", "--m", "2"))
        assert rec["lambda"] == pytest.approx(8 * coeff_A(2, 2) ** 2 * 9.0, rel=1e-9)

    def test_global_options_before_subcommand(self, run_cli, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("family = pure-power\nk = 0\nm = 1\n")
        proc = run_cli("--config", cfg, "--threads", "2", "eval", "--alpha", "2")
        assert proc.returncode == 0, proc.stderr

    @pytest.mark.parametrize("text", ["family = osc-both\ncolour = red\n", "family osc-both\n", "n = one\n"])
    def test_bad_config(self, run_cli, tmp_path, text):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(text)
        proc = run_cli("eval", "--config", cfg, "--alpha", "1")
        assert proc.returncode == 1
        assert "config" in proc.stderr

    def test_missing_config(self, run_cli):
        assert run_cli("eval", "--config", "nope.cfg", "--alpha", "1").returncode == 1


class TestSweep:
    def test_pure_power_constant_ratio(self, run_cli, tmp_path):
        proc = run_cli("sweep", "--family", "pure-power", "--k", "2", "--m", "2", "--start", "0.5", "--stop", "500",
                       "--count", "25", "--spacing", "log", "--out", "curve.csv")
        assert proc.returncode == 0, proc.stderr
        pts = read_curve_csv((tmp_path / "curve.csv").read_text())
        target = 4 * 2 * coeff_A(2, 2) ** 2
        assert len(pts) == 25
        assert max(abs(p.lam / p.alpha**2 - target) / target for p in pts) <= 1e-8

    def test_stdout_when_no_out(self, run_cli):
        proc = run_cli("sweep", "--family", "pure-power", "--k", "0", "--m", "1", "--start", "1", "--stop", "2",
                       "--count", "3")
        assert proc.stdout.splitlines()[0] == "alpha,lambda,err_estimate,nodes"
        assert len(proc.stdout.splitlines()) == 4

    def test_byte_identical_across_threads(self, run_cli, tmp_path):
        base = ["sweep", "--family", "osc-both", "--start", "1", "--stop", "60", "--count", "17"]
        outs = []
        for threads in ("1", "3", "0"):
            assert run_cli(*base, "--threads", threads, "--out", f"t{threads}.csv").returncode == 0
            outs.append((tmp_path / f"t{threads}.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]
        assert b"\r" not in outs[0]

    def test_partial_sweep(self, run_cli, tmp_path):
        proc = run_cli("sweep", "--family", "osc-both", "--start", "1", "--stop", "50", "--count", "4",
                       "--tol", "1e-16", "--abs-tol", "1e-300", "--max-levels", "2", "--out", "partial.csv")
        assert proc.returncode == 4
        text = (tmp_path / "partial.csv").read_text()
        assert text.splitlines()[0].endswith(",converged")
        assert len(read_curve_csv(text)) == 4

    @pytest.mark.parametrize(
        "extra",
        [
            ["--start", "1", "--stop", "2", "--count", "0"],
            ["--start", "2", "--stop", "1"],
            ["--stop", "2"],
            ["--start", "1", "--stop", "2", "--spacing", "cubic"],
            ["--start", "100", "--stop", "101", "--spacing", "phase-locked"],
        ],
    )
    def test_bad_grid(self, run_cli, extra):
        assert run_cli("sweep", "--family", "osc-both", *extra).returncode == 1


def _svg_root(path):
    text = path.read_text()
    assert "<!DOCTYPE" not in text
    for marker in ("@import", "url(http", "<image", "<script"):
        assert marker not in text
    root = ET.fromstring(text)
    hrefs = [v for el in root.iter() for k, v in el.attrib.items() if k.endswith("href")]
    assert all(h.startswith("#") for h in hrefs)  # only references into the same document
    assert root.tag == SVG_NS + "svg"
    assert root.get("viewBox") == "0 0 1200 800"
    return root


def test_sweep_svg_is_self_contained(run_cli, tmp_path):
    proc = run_cli("sweep", "--family", "osc-reaction", "--k", "2", "--m", "2", "--start", "5", "--stop", "80",
                   "--count", "40", "--out", "c.csv", "--svg", "c.svg")
    assert proc.returncode == 0, proc.stderr
    root = _svg_root(tmp_path / "c.svg")
    assert len(list(root.iter(SVG_NS + "path"))) > 2
    first = (tmp_path / "c.svg").read_bytes()
    run_cli("sweep", "--family", "osc-reaction", "--k", "2", "--m", "2", "--start", "5", "--stop", "80",
            "--count", "40", "--out", "c.csv", "--svg", "c.svg")
    assert (tmp_path / "c.svg").read_bytes() == first


class TestFit:
    def test_reaction_law_passes(self, run_cli, reaction_csv, tmp_path):
        proc = run_cli("fit", "--in", reaction_csv, "--theorem", "1.1", "--json", "fit.json", "--svg", "fit.svg")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        lines = dict(line.split(": ", 1) for line in proc.stdout.splitlines())
        assert float(lines["decay_exp"]) == pytest.approx(0.5, abs=0.05)
        assert lines["verdict"].startswith("pass")
        rec = json.loads((tmp_path / "fit.json").read_text())
        assert rec["passed"] is True and rec["theorem"] == "1.1"
        _svg_root(tmp_path / "fit.svg")

    def test_osc_both_law_fits_the_same_curve(self, run_cli, reaction_csv):
        # osc-both shares the osc-reaction (k=2, m=2) expansion to second order
        assert run_cli("fit", "--in", reaction_csv, "--theorem", "1.3i").returncode == 0

    def test_wrong_law_fails(self, run_cli, reaction_csv):
        proc = run_cli("fit", "--in", reaction_csv, "--theorem", "1.1", "--k", "4", "--m", "3")
        assert proc.returncode == 5
        assert "verdict: fail" in proc.stdout

    def test_pure_power_has_no_oscillation(self, run_cli, tmp_path):
        assert run_cli("sweep", "--family", "pure-power", "--k", "2", "--m", "2", "--start", "100",
                       "--stop", str(100 + 16 * math.pi), *PHASE_LOCKED, "--out", "pp.csv").returncode == 0
        proc = run_cli("fit", "--in", "pp.csv", "--theorem", "1.1", "--family", "pure-power")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert "sign_changes: 0" in proc.stdout

    def test_diffusion_remainder_reported(self, run_cli):
        assert run_cli("sweep", "--family", "osc-diffusion", "--n", "1", "--p", "1", "--start", "50", "--stop", "150",
                       *PHASE_LOCKED, "--threads", "0", "--out", "d.csv").returncode == 0
        proc = run_cli("fit", "--in", "d.csv", "--theorem", "1.2i", "--n", "1", "--p", "1")
        assert proc.returncode == 0, proc.stdout
        assert "second term below detection, remainder exponent" in proc.stdout

    def test_too_few_extrema(self, run_cli):
        run_cli("sweep", "--family", "osc-both", "--start", "100", "--stop", "110", "--count", "30", "--out", "s.csv")
        assert run_cli("fit", "--in", "s.csv", "--theorem", "1.3i").returncode == 5

    @pytest.mark.parametrize("body", ["a,b\n1,2\n", "alpha,lambda,err_estimate,nodes\n1,2,x,4\n"])
    def test_schema_mismatch(self, run_cli, tmp_path, body):
        (tmp_path / "bad.csv").write_text(body)
        assert run_cli("fit", "--in", "bad.csv", "--theorem", "1.1").returncode == 1

    def test_missing_input(self, run_cli):
        assert run_cli("fit", "--in", "absent.csv", "--theorem", "1.1").returncode == 1
        assert run_cli("fit", "--theorem", "1.1").returncode == 1


class TestVerify:
    SWEEP = ["sweep", "--family", "osc-both", "--start", "0.5", "--stop", "40", "--count", "12", "--out", "v.csv"]

    def test_converged_sweep_verifies(self, run_cli):
        assert run_cli(*self.SWEEP).returncode == 0
        proc = run_cli("verify", "--family", "osc-both", "--in", "v.csv", "--tol", "1e-6", "--samples", "5")
        assert proc.returncode == 0, proc.stdout + proc.stderr
        rec = json.loads(proc.stdout)
        assert rec["checked"] == 5 and rec["passed"] == 5
        assert rec["worst_residual"] <= 1e-6

    def test_perturbed_lambda_fails(self, run_cli, tmp_path):
        assert run_cli(*self.SWEEP).returncode == 0
        lines = (tmp_path / "v.csv").read_text().splitlines()
        bumped = [lines[0]]
        for row in lines[1:]:
            cols = row.split(",")
            cols[1] = f"{float(cols[1]) * 1.01:.16e}"
            bumped.append(",".join(cols))
        (tmp_path / "bumped.csv").write_text("\n".join(bumped) + "\n")
        proc = run_cli("verify", "--family", "osc-both", "--in", "bumped.csv", "--tol", "1e-6", "--samples", "3")
        assert proc.returncode == 6
        assert json.loads(proc.stdout)["passed"] == 0

    @pytest.mark.parametrize("extra", [["--samples", "0"], ["--tol", "0"], ["--tol", "-1e-6"]])
    def test_validation(self, run_cli, extra):
        run_cli(*self.SWEEP)
        assert run_cli("verify", "--family", "osc-both", "--in", "v.csv", *extra).returncode == 1

    def test_empty_curve(self, run_cli, tmp_path):
        (tmp_path / "empty.csv").write_text("alpha,lambda,err_estimate,nodes\n")
        assert run_cli("verify", "--family", "osc-both", "--in", "empty.csv").returncode == 1
