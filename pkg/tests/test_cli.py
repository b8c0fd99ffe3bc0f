"""Command-line entry point: exit codes, outputs and configuration handling."""
import csv
import json

import pytest

import singular_app
from singular_app import EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_OK, EXIT_SOLVER, main, run

SMALL = ["--nodes", "201"]


def _read(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def test_oned_writes_outputs(tmp_path):
    code = main(["oned", "--alpha", "0", "--gamma", "0.5", *SMALL, "--output", str(tmp_path)])
    assert code == EXIT_OK
    summary = json.loads(_read(tmp_path / "oned" / "summary.json"))
    assert summary["midpoint_value"] == pytest.approx((3.0 / 8.0) ** (4.0 / 3.0), rel=1e-8)
    rows = list(csv.reader(_read(tmp_path / "oned" / "profile.csv").splitlines()))
    assert rows[0] == ["r", "u", "du", "residual"]
    assert len(rows) == 202


def test_identical_runs_give_identical_files(tmp_path):
    for name in ("first", "second"):
        assert main(["oned", "--alpha", "1", "--gamma", "0.5", *SMALL, "--output", str(tmp_path / name)]) == EXIT_OK
    for filename in ("profile.csv", "summary.json"):
        assert _read(tmp_path / "first" / "oned" / filename) == _read(tmp_path / "second" / "oned" / filename)


def test_invalid_gamma_is_a_config_error(tmp_path):
    assert main(["oned", "--alpha", "0", "--gamma", "-1", "--output", str(tmp_path)]) == EXIT_CONFIG


def test_missing_inputs(tmp_path):
    assert main(["--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    assert main(["oned", "--output", str(tmp_path)]) == EXIT_CONFIG
    assert main(["--alpha", "0", "--gamma", "0.5"]) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"command": "oned", "problem": {"alpha": 0, "gamma": 0.5, "beta": 1}}))
    assert run(str(path)) == EXIT_CONFIG


def test_invalid_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    assert run(str(path)) == EXIT_CONFIG


def test_config_file_with_flag_override(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "command": "oned",
        "problem": {"alpha": 0.0, "gamma": 3.0},
        "numeric": {"nodes": 201},
        "output": {"directory": str(tmp_path), "formats": ["json"]},
    }))
    assert main(["--config", str(path), "--gamma", "0.5"]) == EXIT_OK
    summary = json.loads(_read(tmp_path / "oned" / "summary.json"))
    assert summary["midpoint_value"] == pytest.approx((3.0 / 8.0) ** (4.0 / 3.0), rel=1e-8)
    assert not (tmp_path / "oned" / "profile.csv").exists()


def test_hypothesis_violation_exit_code(tmp_path):
    code = main(["scheme", "--alpha", "0", "--gamma", "0.5", "--c", "15", *SMALL, "--output", str(tmp_path)])
    assert code == EXIT_HYPOTHESIS


def test_eigen_command(tmp_path):
    assert main(["eigen", "--alpha", "0", "--gamma", "0.5", *SMALL, "--output", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader(_read(tmp_path / "eigen" / "eigen.csv").splitlines()))
    assert rows[0] == ["lambda1", "iterations", "residual"]
    assert float(rows[1][0]) == pytest.approx(9.8696, rel=1e-2)


def test_verify_writes_markdown(tmp_path):
    code = main(["verify", "--alpha", "0", "--gamma", "0.5", *SMALL, "--fit-window", "0.01", "0.1",
                 "--formats", "csv", "json", "md", "--output", str(tmp_path)])
    assert code == EXIT_OK
    assert _read(tmp_path / "verify" / "checks.md").startswith("# Verification")
    summary = json.loads(_read(tmp_path / "verify" / "summary.json"))
    assert summary["solvers"] == ["oned", "scheme"]


def test_sweep_rows_sorted(tmp_path):
    code = main(["sweep", "--alpha", "0", "--gamma", "0.5", *SMALL, "--sweep-command", "oned",
                 "--sweep-parameter", "gamma", "--sweep-values", "3", "0.5", "2", "--output", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.reader(_read(tmp_path / "sweep" / "sweep.csv").splitlines()))
    assert rows[0] == ["gamma", "status", "midpoint_value", "energy_C", "residual_max"]
    assert [float(row[0]) for row in rows[1:]] == [0.5, 2.0, 3.0]
    assert all(row[1] == "ok" for row in rows[1:])


def test_sweep_records_failures(tmp_path):
    code = main(["sweep", "--alpha", "0", "--gamma", "0.5", *SMALL, "--sweep-command", "oned",
                 "--sweep-parameter", "c", "--sweep-values", "0", "1", "--output", str(tmp_path)])
    assert code == EXIT_OK
    summary = json.loads(_read(tmp_path / "sweep" / "summary.json"))
    assert [row["status"] for row in summary["rows"]] == ["ok", "ParameterError"]
    assert summary["failed"] == 1


def test_sweep_needs_values(tmp_path):
    assert main(["sweep", "--alpha", "0", "--gamma", "0.5", "--output", str(tmp_path)]) == EXIT_CONFIG


def test_coefficient_parsing():
    assert singular_app._coefficient("2.5") == 2.5
    assert singular_app._coefficient("1 + x") == "1 + x"


def test_sweep_with_worker_processes(tmp_path):
    code = main(["sweep", "--alpha", "0", "--gamma", "0.5", *SMALL, "--sweep-command", "oned",
                 "--sweep-parameter", "gamma", "--sweep-values", "3", "0.5", "2", "--jobs", "2",
                 "--output", str(tmp_path)])
    assert code == EXIT_OK
    rows = list(csv.reader(_read(tmp_path / "sweep" / "sweep.csv").splitlines()))
    assert [float(row[0]) for row in rows[1:]] == [0.5, 2.0, 3.0]
    assert all(row[1] == "ok" for row in rows[1:])


def test_verify_restarts_scheme_on_seeded_mesh(tmp_path):
    code = main(["verify", "--alpha", "0", "--gamma", "0.5", *SMALL, "--fit-window", "0.01", "0.1",
                 "--seed", "5", "--formats", "json", "--output", str(tmp_path)])
    assert code == EXIT_OK
    summary = json.loads(_read(tmp_path / "verify" / "summary.json"))
    restart = next(check for check in summary["checks"] if check["check_name"] == "uniqueness_restart")
    assert restart["passed"] is True
    assert "201 vs" in restart["detail"]


def test_library_error_is_a_solver_failure(tmp_path, monkeypatch):
    def fail(config):
        raise ValueError("f(a) and f(b) must have different signs")

    monkeypatch.setattr("singular_src.commands.oned_command.run_oned_command", fail)
    code = main(["oned", "--alpha", "0", "--gamma", "0.5", *SMALL, "--output", str(tmp_path)])
    assert code == EXIT_SOLVER


def test_invalid_environment_settings(tmp_path, monkeypatch):
    monkeypatch.setattr(type(singular_app.settings), "DEFAULT_NODES", 2)
    code = main(["oned", "--alpha", "0", "--gamma", "0.5", "--output", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_eigen_hypothesis_violation_keeps_outputs(tmp_path):
    code = main(["eigen", "--alpha", "0", "--gamma", "0.5", "--c", "15", *SMALL, "--output", str(tmp_path)])
    assert code == EXIT_HYPOTHESIS
    assert (tmp_path / "eigen" / "eigen.csv").exists()
