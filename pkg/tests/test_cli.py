import hashlib
import json
import subprocess
import sys

import pytest

from raltsim.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_NCD, EXIT_OK, main


def run(*argv):
    return main([str(a) for a in argv])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_exit_code_contract_is_stable():
    assert (EXIT_OK, EXIT_CONFIG, EXIT_NCD, EXIT_FAIL) == (0, 1, 2, 3)


def test_simulate_clean_100ft(scenario_dir, capsys):
    assert run("simulate", "--scenario", scenario_dir / "clean.yaml", "--altitude", 100) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["validity"] == "valid"
    assert abs(out["altitude_estimate_ft"] - 100.0) <= 3.0


def test_simulate_no_echo_is_ncd(scenario_dir, capsys):
    assert run("simulate", "--scenario", scenario_dir / "no_echo.yaml", "--altitude", 100) == EXIT_NCD
    out = json.loads(capsys.readouterr().out)
    assert out["validity"] == "no_computed_data" and out["altitude_estimate_ft"] is None


def test_simulate_raw_csv(scenario_dir, tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    assert run("simulate", "--scenario", scenario_dir / "clean.yaml", "--altitude", 50, "--raw", raw) == EXIT_OK
    lines = raw.read_text().splitlines()
    assert lines[0] == "index,re,im" and len(lines) == 2001


def test_malformed_file_exit_1_names_key(scenario_dir, capsys):
    assert run("simulate", "--scenario", scenario_dir / "malformed.yaml", "--altitude", 100) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "receiver.noise_figure" in err and "malformed.yaml:3" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--altitude", "100"],
        ["sweep", "--scenario", "x.yaml", "--seed", "-3"],
        ["sweep", "--scenario", "x.yaml", "--seed", str(2**64)],
        ["sweep", "--scenario", "x.yaml", "--trials", "0"],
        ["sweep", "--scenario", "x.yaml", "--format", "xml"],
        ["launch"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_CONFIG


def test_simulate_negative_altitude_is_config_error(scenario_dir, capsys):
    assert run("simulate", "--scenario", scenario_dir / "clean.yaml", "--altitude", -5) == EXIT_CONFIG


def test_sweep_clean_passes_and_writes_outputs(scenario_dir, tmp_path, capsys):
    rc = run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 10, "--out", tmp_path)
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "pass" and report["totals"]["trials"] == 250
    assert (tmp_path / "trials.csv").read_text().startswith("altitude_ft,trial,estimate_ft,error_ft,snr_db,classification\n")


def test_sweep_unfiltered_spur_fails(scenario_dir, tmp_path, capsys):
    rc = run("sweep", "--scenario", scenario_dir / "spurious_tone.yaml", "--trials", 10, "--no-filter", "--out", tmp_path)
    assert rc == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out
    rc = run("sweep", "--scenario", scenario_dir / "spurious_tone.yaml", "--trials", 10, "--out", tmp_path)
    assert rc == EXIT_OK


def test_seed_changes_fingerprint(scenario_dir, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 2, "--out", a, "--format", "json")
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 2, "--out", b, "--format", "json", "--seed", 77)
    fa = json.loads((a / "report.json").read_text())["fingerprint"]
    fb = json.loads((b / "report.json").read_text())["fingerprint"]
    assert fa != fb
    assert not (a / "trials.csv").exists()


def test_format_csv_only(scenario_dir, tmp_path, capsys):
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 1, "--out", tmp_path, "--format", "csv")
    assert (tmp_path / "trials.csv").exists() and not (tmp_path / "report.json").exists()


def test_env_var_sets_default_out_dir(scenario_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RALTSIM_OUT_DIR", str(tmp_path / "env"))
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 1)
    assert (tmp_path / "env" / "report.json").exists()
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 1, "--out", tmp_path / "flag")
    assert (tmp_path / "flag" / "report.json").exists()


def test_no_stray_temp_files(scenario_dir, tmp_path, capsys):
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 1, "--out", tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.json", "trials.csv"]


def test_compare_clean_within_one_bin(scenario_dir, tmp_path, capsys):
    assert run("compare", "--scenario", scenario_dir / "compare_clean.yaml", "--out", tmp_path) == EXIT_OK
    data = json.loads((tmp_path / "comparison.json").read_text())
    assert data["verdict"] == "pass" and data["divergence_violations"] == 0
    assert (tmp_path / "comparison.csv").exists()


def test_compare_interfered_flags_divergence(scenario_dir, tmp_path, capsys):
    assert run("compare", "--scenario", scenario_dir / "compare_interfered.yaml", "--out", tmp_path) == EXIT_FAIL
    data = json.loads((tmp_path / "comparison.json").read_text())
    assert data["unit_a"]["within_tolerance"] == data["steps"]
    assert data["unit_b"]["erroneous"] + data["unit_b"]["ncd"] > 0


def test_compare_needs_compare_block(scenario_dir, tmp_path, capsys):
    assert run("compare", "--scenario", scenario_dir / "clean.yaml", "--out", tmp_path) == EXIT_CONFIG


def test_classify(scenario_dir, tmp_path, capsys):
    assert run("classify", "--change", scenario_dir / "filter_change.yaml") == EXIT_OK
    assert json.loads(capsys.readouterr().out)["level"] == "minor"
    major = tmp_path / "major.yaml"
    major.write_text("affects_intended_function: true\n")
    assert run("classify", "--change", major, "--out", tmp_path) == EXIT_OK
    assert json.loads((tmp_path / "classification.json").read_text())["level"] == "major"


def test_cia_without_evidence_names_rows(scenario_dir, tmp_path, capsys):
    assert run("cia", "--change", scenario_dir / "filter_change.yaml", "--out", tmp_path) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "TSO-C87" in err and "Non-Regulatory" in err
    assert not (tmp_path / "cia.json").exists()


def test_cia_from_report_file(scenario_dir, tmp_path, capsys):
    run("sweep", "--scenario", scenario_dir / "clean.yaml", "--trials", 1, "--out", tmp_path / "r", "--format", "json")
    report = tmp_path / "r" / "report.json"
    fp = json.loads(report.read_text())["fingerprint"]
    rc = run(
        "cia",
        "--change", scenario_dir / "filter_change.yaml",
        "--matrix", scenario_dir / "moc_matrix.yaml",
        "--evidence", f"TSO-C87={report}",
        "--evidence", "Non-Regulatory=" + fp,
        "--out", tmp_path / "c",
    )
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "c" / "cia.json").read_text())
    assert doc["verification_evidence"] == [fp]
    assert "1. Declaration of the Change" in (tmp_path / "c" / "cia.txt").read_text()


def test_cia_bad_evidence_arg(scenario_dir, tmp_path, capsys):
    assert run("cia", "--change", scenario_dir / "filter_change.yaml", "--evidence", "TSO-C87", "--out", tmp_path) == EXIT_CONFIG
    assert run("cia", "--change", scenario_dir / "filter_change.yaml", "--evidence", "DO-160=abc", "--out", tmp_path) == EXIT_CONFIG


def test_reruns_are_byte_identical(scenario_dir, tmp_path, capsys):
    for d in ("one", "two"):
        run("sweep", "--scenario", scenario_dir / "blocker.yaml", "--trials", 5, "--out", tmp_path / d)
        run("compare", "--scenario", scenario_dir / "compare_clean.yaml", "--out", tmp_path / d)
    for name in ("report.json", "trials.csv", "comparison.json", "comparison.csv"):
        assert digest(tmp_path / "one" / name) == digest(tmp_path / "two" / name)


def test_console_entry_point(scenario_dir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "raltsim.cli", "simulate", "--scenario", str(scenario_dir / "no_echo.yaml"), "--altitude", "100"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_NCD
