"""Command-line interface: subcommands, config merging, exit codes."""

import json

import pytest

from glacier.cli import main


def test_estimate_pi_json(capsys):
    assert main(["estimate", "pi", "--n", "1", "--trials", "50000", "--seed", "7"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["trials"] == 50000
    assert abs(rec["value"] - 0.9375) < 0.01
    assert rec["master_seed"] == 7


def test_estimate_L_includes_probes(capsys):
    assert main(["estimate", "L", "--p", "0.7", "--seed", "3"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["probes"]
    assert rec["value"] >= 1


def test_estimate_missing_arg_exit_code(capsys):
    assert main(["estimate", "pi", "--seed", "1"]) == 1
    assert "required" in capsys.readouterr().err


def test_bad_trials_exit_code(capsys):
    assert main(["estimate", "pi", "--n", "2", "--trials", "0", "--seed", "1"]) == 1


def test_scales_cli(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["scales", "--N", "10000", "--depth", "2", "--seed", "5",
                 "--pi-stderr", "0.01", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["scales"][0:2] == [1, 104]
    assert "bounds" in payload and "plateau" in payload
    csv_lines = (out / "scales.csv").read_text().splitlines()
    assert csv_lines[0] == "k,m_k,pi_hat,pi_stderr,m_lo,m_hi"
    assert len(csv_lines) == 3


def test_prop1_cli_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("Ns=400\nC_grid=0.45,1.0\ntrials=40\nmaster_seed=3\n")
    out = tmp_path / "run"
    assert main(["prop1", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "prop1.csv").exists()
    # flag overrides file value
    assert main(["prop1", "--config", str(cfg), "--trials", "10",
                 "--out", str(tmp_path / "r2")]) == 0
    manifest = json.loads((tmp_path / "r2" / "manifest.json").read_text())
    assert manifest["config"]["trials"] == 10


def test_prop1_cli_empty_grid_is_validation_error(capsys):
    assert main(["prop1", "--N", "400", "--trials", "5", "--seed", "1"]) == 1
    assert "C grid" in capsys.readouterr().err


def test_freeze_diag_cli_unreachable_window_is_runtime_failure(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("theta_trials=600\ntheta_box_cap=64\npi_stderr=0.01\n")
    code = main(["freeze-diag", "--config", str(cfg), "--N", "2500", "--level", "1",
                 "--trials", "5", "--seed", "2"])
    assert code == 2
    assert "unreachable" in capsys.readouterr().err


def test_freeze_diag_cli_with_override(tmp_path, capsys):
    code = main(["freeze-diag", "--N", "900", "--level", "1", "--trials", "20",
                 "--seed", "4", "--p1", "0.56", "--p2", "0.505",
                 "--out", str(tmp_path)])
    assert code == 0
    points = json.loads(capsys.readouterr().out)
    assert points[0]["window"]["p1"] == 0.56
