"""Tests for the command line runner."""

import csv
import math

import pytest
import yaml

from tbs_noma import cli
from tbs_noma.cli import EXIT_BAD_CONFIGURATION, EXIT_OK, EXIT_VALIDATION_FAILED, main
from tbs_noma.config import Config, ExperimentSpec
from tbs_noma.validation import CheckResult, ValidationReport


def read_table(path):
    lines = path.read_text().splitlines()
    header = [line for line in lines if line.startswith("#")]
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    return header, rows


QUICK = ["--target-errors", "100", "--max-bits", "200000", "-q"]


def test_table_text(capsys):
    assert main(["table", "--mode", "1", "--a1", "0.1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "UE1 BPSK, UE2 BPSK" in out
    assert "0.8" in out and "3.2" in out


def test_table_yaml(capsys):
    assert main(["table", "--mode", "2", "--a1", "0.1", "--format", "yaml"]) == EXIT_OK
    document = yaml.safe_load(capsys.readouterr().out)
    assert document["n_terms"] == 3
    assert document["terms"][2]["beta"] == pytest.approx(0.9)


def test_table_all_modes(capsys):
    assert main(["table", "--mode", "all"]) == EXIT_OK
    assert capsys.readouterr().out.count("mode ") == 6


def test_table_invalid_power_allocation(caplog):
    assert main(["table", "--mode", "6", "--a1", "0.4"]) == EXIT_BAD_CONFIGURATION
    assert "mode 6" in caplog.text


def test_curve_single_point(tmp_path):
    out = tmp_path / "curve.csv"
    code = main(["curve", "--snr-start", "10", "--snr-stop", "10", "--policy", "never",
                 "--out", str(out)] + QUICK)
    assert code == EXIT_OK
    header, rows = read_table(out)
    assert len(rows) == 1
    assert list(rows[0]) == cli.CURVE_COLUMNS
    assert rows[0]["policy"] == "never"
    assert float(rows[0]["relay_active_frac_mc"]) == 0.0
    assert any(line.startswith("# seed: ") for line in header)


def test_curve_is_byte_deterministic(tmp_path):
    out = tmp_path / "curve.csv"
    args = ["curve", "--snr-start", "0", "--snr-stop", "10", "--snr-step", "5",
            "--policy", "optimum", "--mode", "3", "--out", str(out)] + QUICK
    assert main(args) == EXIT_OK
    first = out.read_bytes()
    assert main(args) == EXIT_OK
    assert out.read_bytes() == first
    assert main(args + ["--workers", "3"]) == EXIT_OK
    assert out.read_bytes() == first


@pytest.mark.slow
def test_curve_all_modes(tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["curve", "--mode", "all", "--snr-start", "0", "--snr-stop", "0",
                 "--out", str(out)] + QUICK)
    assert code == EXIT_OK
    for mode_id in range(1, 7):
        _, rows = read_table(tmp_path / f"sweep_mode{mode_id}.csv")
        assert rows[0]["mode"] == str(mode_id)


def test_curve_rejects_bad_configuration(tmp_path):
    assert main(["curve", "--a1", "0.6", "--out", str(tmp_path / "x.csv")]) == \
        EXIT_BAD_CONFIGURATION
    assert main(["curve", "--policy", "sometimes", "--out", str(tmp_path / "x.csv")]) == \
        EXIT_BAD_CONFIGURATION
    assert main(["threshold", "--mode", "all"]) == EXIT_BAD_CONFIGURATION


def test_curve_reports_invalid_power_allocation(tmp_path, caplog):
    code = main(["curve", "--mode", "6", "--a1", "0.4", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_BAD_CONFIGURATION
    assert "beta_3" in caplog.text


def test_compare(tmp_path):
    out = tmp_path / "compare.csv"
    code = main(["compare", "--policies", "never,always", "--snr-start", "0",
                 "--snr-stop", "5", "--out", str(out)] + QUICK)
    assert code == EXIT_OK
    header, rows = read_table(out)
    assert [(r["snr_db"], r["policy"]) for r in rows] == [
        ("0", "never"), ("0", "always"), ("5", "never"), ("5", "always")]
    assert "# policies: never,always" in header


def test_threshold_csv(tmp_path):
    out = tmp_path / "threshold.csv"
    code = main(["threshold", "--mode", "1", "--a1", "0.2", "--sigma-s1-db", "10",
                 "--sigma-r-db", "10", "--snr-start", "0", "--snr-stop", "40",
                 "--snr-step", "10", "--out", str(out), "-q"])
    assert code == EXIT_OK
    _, rows = read_table(out)
    assert len(rows) == 5
    closed = [float(r["sinr_th_closed_form"]) for r in rows]
    for row, value in zip(rows, closed):
        assert value < 4.0
        assert abs(value - float(row["sinr_th_brute_force"])) <= max(1e-3, 4.0 / 199)
        assert float(row["abep_at_closed_form"]) <= float(row["abep_at_brute_force"]) + 1e-12
        assert {"delta_1", "delta_2"} <= set(row)
    assert all(b >= a for a, b in zip(closed, closed[1:]))


def test_config_file_and_save_config(tmp_path):
    config_path = tmp_path / "exp.yaml"
    config_path.write_text(yaml.safe_dump({"network": {"mode": 4, "a1": 0.15},
                                           "sweep": {"snr_start": 5, "snr_stop": 5}}))
    saved = tmp_path / "effective.yaml"
    out = tmp_path / "curve.csv"
    code = main(["curve", "--config", str(config_path), "--policy", "never",
                 "--save-config", str(saved), "--out", str(out)] + QUICK)
    assert code == EXIT_OK
    spec = ExperimentSpec.from_config(Config(str(saved)))
    assert (spec.mode_id, spec.a1, spec.policy, spec.output) == (4, 0.15, "never", out)
    _, rows = read_table(out)
    assert rows[0]["mode"] == "4"


def test_missing_config_file(tmp_path):
    assert main(["curve", "--config", str(tmp_path / "nope.yaml")]) == EXIT_BAD_CONFIGURATION


def _report(passed):
    report = ValidationReport("quick", 1)
    report.checks.append(CheckResult("quadrature: conditional SIC-stage ABEP", passed,
                                     1e-9 if passed else 0.1, 0.0, 1e-6, 1))
    report.runtime = 0.5
    return report


@pytest.mark.parametrize("passed, expected", [(True, EXIT_OK), (False, EXIT_VALIDATION_FAILED)])
def test_validate_exit_code_and_report(tmp_path, monkeypatch, capsys, passed, expected):
    monkeypatch.setattr(cli, "run_validation", lambda *args, **kwargs: _report(passed))
    report_path = tmp_path / "report.yaml"
    assert main(["validate", "--profile", "quick", "--report", str(report_path)]) == expected
    out = capsys.readouterr().out
    assert ("[PASS]" if passed else "[FAIL]") in out
    document = yaml.safe_load(report_path.read_text())
    assert document["passed"] is passed
    assert document["runtime_seconds"] == 0.5
    assert document["checks"][0]["seed"] == 1


def test_validate_unknown_profile():
    with pytest.raises(SystemExit) as excinfo:
        main(["validate", "--profile", "sloppy"])
    assert excinfo.value.code == 2


def test_fmt():
    assert cli._fmt(math.inf) == "inf"
    assert cli._fmt(0.1) == "0.1"
    assert cli._fmt(1.23456789012345e-7) == "1.23456789e-07"
