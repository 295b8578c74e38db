"""Scenario run and run-history tools."""

from __future__ import annotations

from fnls_lab.config import LabConfig
from fnls_lab.exceptions import LabError
from fnls_lab.scenario import run_scenario
from fnls_lab.storage import RunStorage
from fnls_lab.tools import error_result, open_storage, prepare_scenario


def evolve_scenario(config: LabConfig, scenario_path: str, out: str | None = None, seed: int | None = None) -> dict:
    """Run a scenario end to end: criteria, evolution with virial diagnostics, artifacts.

    Args:
        config: Application configuration.
        scenario_path: Path of the scenario TOML file.
        out: Output directory, defaults to FNLS_OUTPUT_DIR.
        seed: Overrides the scenario seed.

    Returns:
        Dict with status, exit code, the run directory and the JSON summary.
    """
    try:
        scenario = prepare_scenario(config, scenario_path, seed)
        storage = open_storage(config, out)
        summary = run_scenario(scenario, storage)
    except LabError as exc:
        return error_result(exc)
    return {
        "status": summary.status,
        "exit_code": summary.exit_code,
        "run_dir": str(storage.base_path / scenario.name),
        "summary": summary.model_dump(mode="json"),
    }


def get_run_history(storage: RunStorage, status: str | None = None, limit: int = 10) -> dict:
    """List stored runs, newest first.

    Args:
        storage: Run storage instance.
        status: Optional filter by run status.
        limit: Maximum number of runs to return.

    Returns:
        Dict with the run summaries.
    """
    runs = storage.list_runs(status=status, limit=limit)
    return {
        "runs": runs,
        "total_returned": len(runs),
        "filter": status,
    }
