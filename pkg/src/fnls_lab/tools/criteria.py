"""Blow-up criteria tool."""

from __future__ import annotations

from fnls_lab.config import LabConfig
from fnls_lab.criteria import check_criteria
from fnls_lab.exceptions import LabError
from fnls_lab.scenario import build_grid, build_initial_condition, needs_ground_state, solve_ground_state
from fnls_lab.tools import error_result, open_storage, prepare_scenario


def check_scenario_criteria(config: LabConfig, scenario_path: str, out: str | None = None) -> dict:
    """Evaluate the blow-up criteria for a scenario's initial datum without evolving it.

    The ground state is solved only when the datum or the threshold branch needs it.
    The verdict is written to criteria.json in the run directory.

    Args:
        config: Application configuration.
        scenario_path: Path of the scenario TOML file.
        out: Output directory, defaults to FNLS_OUTPUT_DIR.

    Returns:
        Dict with the criterion verdict.
    """
    try:
        scenario = prepare_scenario(config, scenario_path)
        grid = build_grid(scenario)
        q = None
        u0 = None if scenario.initial.kind == "ground-state-multiple" else build_initial_condition(scenario, grid)
        if needs_ground_state(scenario, u0):
            q = solve_ground_state(scenario, grid)
        if u0 is None:
            u0 = build_initial_condition(scenario, grid, q)
        verdict = check_criteria(u0, scenario.params, scenario.symmetry_class, q)
        payload = {"status": "completed", "exit_code": 0, "verdict": verdict.model_dump(mode="json")}
        open_storage(config, out).save_json(scenario.name, "criteria.json", payload["verdict"])
    except LabError as exc:
        return error_result(exc)
    return payload
