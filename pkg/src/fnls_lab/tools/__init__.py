"""Command implementations shared by the CLI and the MCP server.

Every command returns a JSON-serializable dict with ``status`` and ``exit_code``
keys; lab errors are reported in the dict instead of being raised.
"""

from __future__ import annotations

import logging

from fnls_lab.config import LabConfig
from fnls_lab.exceptions import (
    LabError,
    ParameterError,
    ScenarioConfigError,
    SnapshotFormatError,
    SymmetryError,
)
from fnls_lab.models import EXIT_CODES, ScenarioConfig
from fnls_lab.scenario import apply_overrides, load_scenario
from fnls_lab.storage import RunStorage

logger = logging.getLogger(__name__)

_CONFIG_ERRORS = (ScenarioConfigError, ParameterError, SymmetryError, SnapshotFormatError)


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CODES["config-error"]
    return EXIT_CODES["numerical-failure"]


def error_result(exc: LabError) -> dict:
    """Dict form of a lab error for CLI and MCP callers."""
    code = exit_code_for(exc)
    status = "config-error" if code == EXIT_CODES["config-error"] else "numerical-failure"
    logger.error("%s: %s", type(exc).__name__, exc)
    result: dict = {"status": status, "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if exc.details:
        result["details"] = exc.details
    return result


def prepare_scenario(config: LabConfig, scenario_path: str, seed: int | None = None) -> ScenarioConfig:
    """Load a scenario and fill the settings it leaves unset from the environment."""
    scenario = load_scenario(scenario_path)
    if seed is not None:
        scenario = apply_overrides(scenario, seed=seed)
    if "boundary_threshold" not in scenario.detection.model_fields_set:
        scenario.detection.boundary_threshold = config.boundary_threshold
    if "nodes" not in scenario.quadrature.model_fields_set:
        scenario.quadrature.nodes = config.quadrature_nodes
    return scenario


def open_storage(config: LabConfig, out: str | None = None) -> RunStorage:
    return RunStorage(out or config.output_dir)
