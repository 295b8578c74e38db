"""Tests for the shared tool helpers, the scenario run tool and run history."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

from fnls_lab.config import LabConfig
from fnls_lab.exceptions import ConvergenceError, NonFiniteFieldError, ScenarioConfigError, SymmetryError
from fnls_lab.storage import RunStorage
from fnls_lab.tools import error_result, exit_code_for, prepare_scenario
from fnls_lab.tools.runs import evolve_scenario, get_run_history

ScenarioWriter = Callable[..., Path]

CRITERIA_ONLY = {
    "initial": 'kind = "gaussian"\namplitude = 5.0',
    "time": "dt0 = 1e-3\nt_end = 0.0\nsample_interval = 0.005",
}


class TestErrorResult:
    def test_config_errors(self) -> None:
        assert exit_code_for(ScenarioConfigError("bad")) == 64
        assert exit_code_for(SymmetryError("asymmetric", deviation=0.1)) == 64

    def test_numerical_errors(self) -> None:
        assert exit_code_for(ConvergenceError("diverged")) == 4
        assert exit_code_for(NonFiniteFieldError("nan")) == 4

    def test_dict_form(self) -> None:
        result = error_result(ScenarioConfigError("bad axis", details={"axis": "dt0"}))
        assert result == {
            "status": "config-error",
            "exit_code": 64,
            "error": "ScenarioConfigError",
            "message": "bad axis",
            "details": {"axis": "dt0"},
        }

    def test_no_details(self) -> None:
        assert "details" not in error_result(ConvergenceError("diverged"))


class TestPrepareScenario:
    def test_environment_fills_unset_settings(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        path = write_scenario(detection="ratio = 20.0", quadrature="")
        scenario = prepare_scenario(lab_config, str(path))
        assert scenario.detection.boundary_threshold == lab_config.boundary_threshold
        assert scenario.quadrature.nodes == lab_config.quadrature_nodes
        assert scenario.detection.ratio == 20.0

    def test_scenario_settings_win(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        scenario = prepare_scenario(lab_config, str(write_scenario()), seed=9)
        assert scenario.detection.boundary_threshold == 1.0
        assert scenario.quadrature.nodes == 48
        assert scenario.seed == 9


class TestEvolveScenario:
    def test_criteria_only_run(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        result = evolve_scenario(lab_config, str(write_scenario(**CRITERIA_ONLY)), seed=4)
        assert result["status"] == "completed"
        assert result["exit_code"] == 0
        assert result["summary"]["seed"] == 4
        assert result["summary"]["verdict"]["branch"] == "negative-energy"
        assert Path(result["run_dir"]).name == "small"
        assert (Path(lab_config.output_dir) / "small" / "summary.json").is_file()

    def test_output_override(self, lab_config: LabConfig, write_scenario: ScenarioWriter, tmp_path: Path) -> None:
        out = tmp_path / "elsewhere"
        result = evolve_scenario(lab_config, str(write_scenario(**CRITERIA_ONLY)), out=str(out))
        assert result["run_dir"] == str(out / "small")

    def test_missing_scenario(self, lab_config: LabConfig, tmp_path: Path) -> None:
        result = evolve_scenario(lab_config, str(tmp_path / "absent.toml"))
        assert result["status"] == "config-error"
        assert result["exit_code"] == 64
        assert result["error"] == "ScenarioConfigError"

    def test_mass_drift_bound_is_a_numerical_failure(
        self, lab_config: LabConfig, write_scenario: ScenarioWriter
    ) -> None:
        path = write_scenario(detection="boundary_threshold = 1.0\nmass_drift_bound = 1e-300")
        result = evolve_scenario(lab_config, str(path))
        assert result["status"] == "numerical-failure"
        assert result["exit_code"] == 4
        summary = result["summary"]
        assert summary["detection"]["reason"] == "mass drift"
        assert not summary["detection"]["detected"]
        assert summary["samples"] == 2
        assert summary["max_mass_drift"] > 0


class TestGetRunHistory:
    def test_empty_history(self, run_storage: RunStorage) -> None:
        result = get_run_history(run_storage)
        assert result["total_returned"] == 0
        assert result["runs"] == []
        assert result["filter"] is None

    def test_returns_runs(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        evolve_scenario(lab_config, str(write_scenario(**CRITERIA_ONLY)))
        evolve_scenario(lab_config, str(write_scenario("other", **CRITERIA_ONLY)))
        storage = RunStorage(lab_config.output_dir)
        assert get_run_history(storage)["total_returned"] == 2
        assert get_run_history(storage, limit=1)["total_returned"] == 1
        filtered = get_run_history(storage, status="blowup-detected")
        assert filtered["total_returned"] == 0
        assert filtered["filter"] == "blowup-detected"
