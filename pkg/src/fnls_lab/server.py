"""FastMCP server entry point for the fractional NLS lab.

Registers the lab commands as MCP tools and starts the server. Every tool
returns the same JSON dict the command line prints.
"""

from __future__ import annotations

import logging

import scipy.fft
from fastmcp import FastMCP

from fnls_lab.config import LabConfig, get_config
from fnls_lab.storage import RunStorage
from fnls_lab.tools.criteria import check_scenario_criteria
from fnls_lab.tools.ground_state import compute_ground_state
from fnls_lab.tools.runs import evolve_scenario, get_run_history
from fnls_lab.tools.sweep import sweep_scenario
from fnls_lab.tools.verification import run_verification
from fnls_lab.tools.virial import virial_check as run_virial_check

logger = logging.getLogger(__name__)

mcp = FastMCP("fnls-virial-lab")

# Module-level singletons initialized on first tool call
_config: LabConfig | None = None
_storage: RunStorage | None = None


def _get_dependencies() -> tuple[LabConfig, RunStorage]:
    """Lazily initialize and return the shared config and storage."""
    global _config, _storage  # noqa: PLW0603
    if _config is None:
        _config = get_config()
        _storage = RunStorage(_config.output_dir)
    return _config, _storage  # type: ignore[return-value]


@mcp.tool()
def ground_state(scenario_path: str = "") -> dict:
    """Solve for the ground state Q of the scenario's parameters and store it with its functionals."""
    if not scenario_path:
        return {"status": "error", "message": "scenario_path is required"}
    config, _ = _get_dependencies()
    with scipy.fft.set_workers(config.threads):
        return compute_ground_state(config, scenario_path)


@mcp.tool()
def evolve(scenario_path: str = "", seed: int | None = None) -> dict:
    """Run a scenario: blow-up criteria, evolution with virial diagnostics, blow-up detection."""
    if not scenario_path:
        return {"status": "error", "message": "scenario_path is required"}
    config, _ = _get_dependencies()
    with scipy.fft.set_workers(config.threads):
        return evolve_scenario(config, scenario_path, seed=seed)


@mcp.tool()
def virial_check(scenario_path: str = "", eta: float = 0.1, nonlinear: bool = True) -> dict:
    """Check the localized virial identities for phi_R and psi_R along the scenario's trajectory."""
    if not scenario_path:
        return {"status": "error", "message": "scenario_path is required"}
    config, _ = _get_dependencies()
    with scipy.fft.set_workers(config.threads):
        return run_virial_check(config, scenario_path, eta=eta, nonlinear=nonlinear)


@mcp.tool()
def verify(seed: int = 0) -> dict:
    """Run the quadrature gates, exact identities, cutoff properties and inequality corpora."""
    config, _ = _get_dependencies()
    with scipy.fft.set_workers(config.threads):
        return run_verification(config, seed=seed)


@mcp.tool()
def criteria(scenario_path: str = "") -> dict:
    """Evaluate which blow-up criterion the scenario's initial datum satisfies."""
    if not scenario_path:
        return {"status": "error", "message": "scenario_path is required"}
    config, _ = _get_dependencies()
    with scipy.fft.set_workers(config.threads):
        return check_scenario_criteria(config, scenario_path)


@mcp.tool()
def sweep(scenario_path: str = "", axes: list[str] | None = None, seed: int | None = None) -> dict:
    """Run a scenario over the product of parameter axes given as name=v1,v2,... specs."""
    if not scenario_path:
        return {"status": "error", "message": "scenario_path is required"}
    config, _ = _get_dependencies()
    return sweep_scenario(config, scenario_path, axes=axes, seed=seed)


@mcp.tool()
def list_runs(status: str | None = None, limit: int = 10) -> dict:
    """List stored runs, newest first, optionally filtered by status."""
    _, storage = _get_dependencies()
    return get_run_history(storage, status=status, limit=limit)


@mcp.tool()
def health_check() -> dict:
    """Verify the lab server is running and its output directory is writable."""
    try:
        config, storage = _get_dependencies()
        radius = storage.base_path / ".health"
        radius.write_text("ok")
        radius.unlink()
        return {"status": "healthy", "output_dir": str(storage.base_path), "threads": config.threads}
    except Exception as exc:
        return {"status": "unhealthy", "error": str(exc)}


def main() -> None:
    """Entry point for the fnls-virial-lab MCP server."""
    config, _ = _get_dependencies()
    logging.basicConfig(level=config.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    logger.info("Starting fnls-virial-lab MCP server")
    mcp.run()
