"""Parameter sweep tool."""

from __future__ import annotations

from fnls_lab.config import LabConfig
from fnls_lab.exceptions import LabError
from fnls_lab.models import EXIT_CODES
from fnls_lab.sweep import run_sweep, sweep_axes
from fnls_lab.tools import error_result, open_storage, prepare_scenario


def sweep_scenario(
    config: LabConfig,
    scenario_path: str,
    axes: list[str] | None = None,
    out: str | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> dict:
    """Run a scenario over the product of sweep axes, resuming finished cells.

    Args:
        config: Application configuration.
        scenario_path: Path of the scenario TOML file (template).
        axes: Extra axis specs ``name=v1,v2,...`` overriding the file's sweep section.
        out: Output directory, defaults to FNLS_OUTPUT_DIR.
        seed: Overrides the scenario seed.
        workers: Process pool size, defaults to FNLS_THREADS.

    Returns:
        Dict with the verdict table rows; the exit code is 0 unless every cell failed.
    """
    try:
        template = prepare_scenario(config, scenario_path, seed)
        storage = open_storage(config, out)
        rows = run_sweep(template, sweep_axes(template, axes), storage, workers=workers or config.threads)
    except LabError as exc:
        return error_result(exc)
    failed = sum(1 for row in rows if row.status == "error")
    all_failed = bool(rows) and failed == len(rows)
    return {
        "status": "completed_with_errors" if failed else "completed",
        "exit_code": EXIT_CODES["numerical-failure"] if all_failed else 0,
        "sweep_csv": str(storage.base_path / template.name / "sweep.csv"),
        "cells": len(rows),
        "failed": failed,
        "rows": [row.model_dump(mode="json") for row in rows],
    }
