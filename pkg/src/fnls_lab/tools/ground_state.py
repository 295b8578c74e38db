"""Ground-state solve and threshold tool."""

from __future__ import annotations

from fnls_lab.config import LabConfig
from fnls_lab.exceptions import LabError
from fnls_lab.ground_state import DILATION_TOL, thresholds
from fnls_lab.scenario import build_grid, solve_ground_state
from fnls_lab.tools import error_result, open_storage, prepare_scenario


def compute_ground_state(config: LabConfig, scenario_path: str, out: str | None = None) -> dict:
    """Solve for Q on the scenario grid and report its functionals and thresholds.

    Writes ground_state.fld and ground_state.json into the run directory. The
    threshold record is omitted for mass-critical and subcritical parameters.

    Args:
        config: Application configuration.
        scenario_path: Path of the scenario TOML file.
        out: Output directory, defaults to FNLS_OUTPUT_DIR.

    Returns:
        Dict with the iteration count, residual, Pohozaev defects and thresholds.
    """
    try:
        scenario = prepare_scenario(config, scenario_path)
        params = scenario.params
        result = solve_ground_state(scenario, build_grid(scenario))
        record = thresholds(result, params) if params.s_c > 1e-12 else None
        payload = {
            "status": "completed",
            "exit_code": 0,
            "params": params.model_dump(),
            "iterations": result.iterations,
            "residual": result.residual,
            "mass": result.mass,
            "energy": result.energy,
            "grad_norm": result.grad_norm,
            "pohozaev_defect": result.pohozaev_defect,
            "dilation_defect": result.dilation_defect,
            "under_resolved": record.under_resolved if record else result.dilation_defect > DILATION_TOL,
            "thresholds": record.model_dump() if record else None,
        }
        storage = open_storage(config, out)
        storage.write_snapshot(scenario.name, "ground_state", result.Q, params.s, params.sigma, 0.0)
        storage.save_json(scenario.name, "ground_state.json", payload)
    except LabError as exc:
        return error_result(exc)
    return payload
