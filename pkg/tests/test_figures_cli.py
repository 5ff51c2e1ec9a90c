import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ecsbell import oracle_check
from ecsbell.cli import main, parse_settings
from ecsbell.decoherence import DecoherenceClock
from ecsbell.errors import ValidationError
from ecsbell.figures import (CSV_COLUMNS, ConfigError, SweepJob, crossing, figure_jobs, grid,
                             parse_number_list, run_jobs)
from ecsbell.qubit import tt_eigenvalues_closed_form


def _table(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_grid_inclusive_and_exact():
    g = grid(0.0, 0.99, 0.01)
    assert len(g) == 100 and g[-1] == 0.99 and g[37] == 0.37
    assert parse_number_list("0.5:1.5:0.5, 3") == (0.5, 1.0, 1.5, 3.0)
    with pytest.raises(ValueError):
        parse_number_list("1:2")


def test_crossing_rule():
    r = [0.0, 0.1, 0.2, 0.3]
    assert crossing(r, [2.5, 2.2, 1.8, 1.5]) == pytest.approx(0.15)
    # last exceedance wins, interpolated to the next grid point
    assert crossing(r, [2.5, 1.9, 2.1, 1.9]) == pytest.approx(0.25)
    assert crossing(r, [1.9, 1.8, 1.7, 1.6]) is None
    assert crossing(r, [2.5, 2.4, 2.3, 2.2]) is None
    assert crossing(r, [2.5, 2.0, 1.0, 0.5]) == pytest.approx(0.1)


def test_config_round_trip():
    job = figure_jobs("fig3", alpha=(2.0,), starts=8, seed_box_halfwidth=0.25)[0]
    assert SweepJob.from_config(job.to_config()) == job
    auto = SweepJob(alpha=(1.0,), r=(0.0, 0.5))
    assert "seed_box_halfwidth = auto" in auto.to_config()
    assert SweepJob.from_config(auto.to_config()) == auto


@pytest.mark.parametrize("text,line", [
    ("alpha = 1\nbogus = 3\n", 2),
    ("alpha = 1\nalpha = 2\n", 2),
    ("# c\n\nstarts = many\n", 3),
    ("alpha 1\n", 1),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as err:
        SweepJob.from_config(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


@pytest.mark.parametrize("kw", [dict(alpha=(0.0,)), dict(r=(1.0,)), dict(measure="nope"),
                                dict(state="odd"), dict(measure="parity-probabilities"),
                                dict(starts=0), dict(format="xml")])
def test_job_validation(kw):
    with pytest.raises(ValidationError):
        SweepJob(**kw)


def test_figure_jobs_cover_tags():
    assert len(figure_jobs("fig2")) == 4
    assert figure_jobs("fig7")[0].layout().axis_mode == "imag"
    assert figure_jobs("fig2")[1].layout().pin_origin
    assert figure_jobs("fig4")[0].alpha == (0.1,)
    with pytest.raises(ValidationError):
        figure_jobs("fig9")


def test_fig5_single_alpha_curve(tmp_path):
    out = tmp_path / "f5.csv"
    text, results = run_jobs(figure_jobs("fig5", alpha=(2.0,)), out)
    assert out.read_text() == text
    (curve,) = results[0]
    vals = curve.values
    assert len(vals) == 100
    assert vals[0] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    early = curve.params <= 0.95
    assert np.all(np.diff(vals[early]) < 0)
    # near r -> 1 the cat basis tends to the vacuum pair and the value recovers, below 2
    assert vals[-1] > vals[-2] and np.all(vals[curve.params > 0.6] < 2)
    assert curve.crossing() == pytest.approx(0.57, abs=0.01)
    table = _table(text)
    assert list(table[0].keys()) == list(CSV_COLUMNS)
    assert {row["measure"] for row in table} == {"qubit-ideal"}


def test_fig6_rows():
    text, _ = run_jobs(figure_jobs("fig6", alpha=(2.0,), eps=(0.0, 0.5)))
    table = _table(text)
    assert [r["quantity"] for r in table] == ["pe", "pe_tilde"] * 2
    assert float(table[0]["bell_value"]) == pytest.approx(1.0)


def _small_job(**kw):
    base = dict(state="minus", alpha=(1.0,), r=(0.0, 0.1, 0.2), starts=4, max_iterations=200,
                axis_mode="imag")
    base.update(kw)
    return SweepJob(**base)


def test_rerun_is_byte_identical_and_json_mirrors_csv():
    job = _small_job()
    a, _ = run_jobs([job])
    b, _ = run_jobs([SweepJob.from_config(job.to_config())])
    assert a == b
    doc = json.loads(run_jobs([job], fmt="json")[0])
    pts = doc["jobs"][0]["curves"][0]["points"]
    table = _table(a)
    assert len(pts) == len(table) == 3
    assert pts[1]["bell_value"] == float(table[1]["bell_value"])
    assert doc["schema_version"] == 1
    assert doc["jobs"][0]["config"]["starts"] == 4


def test_workers_match_serial():
    a, _ = run_jobs([_small_job(warm_start=False)])
    b, _ = run_jobs([_small_job(warm_start=False, workers=3)])
    assert _table(a) == _table(b)


# --- cli ------------------------------------------------------------------------

def _eval(capsys, *argv):
    assert main(["eval", *argv]) == 0
    return json.loads(capsys.readouterr().out)


def test_eval_zero_settings(capsys):
    rec = _eval(capsys, "--alpha", "1", "--settings", "0,0,0,0", "--verify", "--nmax", "40")
    assert rec["value"] == pytest.approx(2.0, abs=1e-12)
    assert rec["oracle_value"] == pytest.approx(2.0, abs=1e-10)


def test_eval_optimize_in_quantum_range(capsys):
    rec = _eval(capsys, "--alpha", "1", "--starts", "16", "--axis", "imag")
    assert 2.0 < rec["value"] <= 2 * math.sqrt(2) + 1e-12
    assert rec["report"]["best_value"] == rec["value"]


def test_eval_qubit_ideal_matches_closed_form(capsys):
    rec = _eval(capsys, "--alpha", "2", "--measure", "qubit-ideal", "--r", "0.4")
    lam = sorted(tt_eigenvalues_closed_form(2.0, DecoherenceClock.from_r(0.4)))
    assert rec["value"] == pytest.approx(2 * math.sqrt(lam[-1] + lam[-2]), abs=1e-12)


def test_eval_gamma_tau_clock(capsys):
    rec = _eval(capsys, "--alpha", "1", "--gamma-tau", "0.5", "--settings", "0,0,0,0")
    assert rec["clock"]["r"] == pytest.approx(math.sqrt(1 - math.exp(-0.5)))


@pytest.mark.parametrize("argv", [
    ["eval", "--alpha", "1", "--settings", "0,0,x,0"],
    ["eval", "--alpha", "1", "--settings", "0,0,0"],
    ["eval", "--alpha", "0"],
    ["eval", "--alpha", "1", "--r", "1.5"],
    ["eval", "--alpha", "1", "--measure", "cv-bw-restricted", "--settings", "1,0,0,0"],
    ["figure", "fig9"],
    ["sweep", "/nonexistent/cfg"],
    ["frobnicate"],
])
def test_invalid_input_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1
    assert capsys.readouterr().err


def test_settings_parse_diagnostic():
    with pytest.raises(ValidationError, match="item 3 'x' at column 5"):
        parse_settings("0,0,x,0")
    assert_allclose(parse_settings("0, 1j, 0.5-0.1j ,2"), [0, 1j, 0.5 - 0.1j, 2])


def test_sweep_config_and_dump(tmp_path, capsys):
    assert main(["figure", "fig4", "--dump-config"]) == 0
    dumped = capsys.readouterr().out
    assert SweepJob.from_config(dumped) == figure_jobs("fig4")[0]
    cfg = tmp_path / "job.cfg"
    cfg.write_text(_small_job().to_config())
    out = tmp_path / "out.csv"
    assert main(["sweep", str(cfg), "--out", str(out)]) == 0
    assert "crossing_r" in capsys.readouterr().out
    assert _table(out.read_text())[0]["state"] == "minus"
    bad = tmp_path / "bad.cfg"
    bad.write_text("alpha = 1\nstarts = -3\n")
    assert main(["sweep", str(bad)]) == 1


def test_oracle_check_exit_codes(capsys):
    assert main(["oracle-check", "overlaps", "--cases", "5"]) == 0
    assert main(["oracle-check", "parity", "--cases", "3", "--tol", "1e-30"]) == 2
    assert "failing case" in capsys.readouterr().out


def test_oracle_check_deterministic():
    for seed in (1, 2):
        a = oracle_check.run_checks("parity", 5, seed)
        b = oracle_check.run_checks("parity", 5, seed)
        assert a[0].max_deviation == b[0].max_deviation
    assert oracle_check.trivial_decoherence_case() < 1e-14


def test_oracle_check_full_suite():
    reports = oracle_check.run_checks("all", 100, 7)
    for r in reports:
        assert r.passed, r.summary()
        assert r.max_deviation < 1e-8


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ecsbell.cli", "eval", "--alpha", "1",
                           "--settings", "0,0,0,0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == pytest.approx(2.0)
