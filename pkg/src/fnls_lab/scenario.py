"""Scenario files, initial data and the end-to-end scenario run.

A scenario is a TOML document with dotted section keys:

    name = "blowup-3d"
    params.N = 3
    params.s = 0.7
    params.sigma = 0.6
    grid.n = [64, 64, 64]
    grid.L = [32.0, 32.0, 32.0]
    initial.kind = "gaussian"
    initial.amplitude = 4.0
    R = 1.5
    time.t_end = 1.0
    detection.ratio = 2.0

run_scenario solves for the ground state when the datum or the criteria need it,
checks the blow-up criteria, evolves with virial diagnostics on the sampling
lattice and writes every artifact through RunStorage.
"""

from __future__ import annotations

import logging
import tomllib
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from fnls_lab.criteria import check_criteria, snapshot
from fnls_lab.cutoffs import CylWeight
from fnls_lab.evolution import SimulationState, StepController, evolve
from fnls_lab.exceptions import (
    ConvergenceError,
    IdentityMismatchError,
    NonFiniteFieldError,
    QuadratureGateError,
    ScenarioConfigError,
    SnapshotFormatError,
    SymmetryError,
)
from fnls_lab.ground_state import GroundStateResult, petviashvili
from fnls_lab.models import EXIT_CODES, BlowupVerdict, RunStatus, RunSummary, ScenarioConfig
from fnls_lab.reports import render_run_report
from fnls_lab.spectral import Field, Grid, energy
from fnls_lab.stats import fit_growth
from fnls_lab.storage import RunStorage, read_snapshot
from fnls_lab.virial import centered_difference, series_diagnostics

logger = logging.getLogger(__name__)

SWEEP_AXES = ("amplitude", "sigma", "s", "R")


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file.

    A relative ``initial.path`` is resolved against the scenario file's directory.

    Raises:
        ScenarioConfigError: If the file is missing, is not valid TOML, or fails validation.
    """
    file_path = Path(path)
    try:
        data = tomllib.loads(file_path.read_text())
    except FileNotFoundError as exc:
        raise ScenarioConfigError(f"scenario file not found: {file_path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioConfigError(f"scenario file {file_path} is not valid TOML: {exc}") from exc

    initial = data.get("initial")
    if isinstance(initial, dict) and isinstance(initial.get("path"), str):
        referenced = Path(initial["path"])
        if not referenced.is_absolute():
            initial["path"] = str(file_path.parent / referenced)
    return validate_scenario(data, source=str(file_path))


def validate_scenario(data: Mapping[str, object], source: str = "scenario") -> ScenarioConfig:
    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ScenarioConfigError(
            f"invalid {source}: {exc.error_count()} validation error(s)",
            details={"errors": exc.errors(include_url=False, include_context=False)},
        ) from exc
    if cutoff_exceeds_box(config):
        logger.warning(
            "%s: cutoff radius 10R=%g exceeds min(L_y)/2=%g; the weight is truncated before its exterior regime",
            source,
            10 * config.R,
            min(config.grid.L[:-1]) / 2,
        )
    return config


def cutoff_exceeds_box(config: ScenarioConfig) -> bool:
    """Whether the outer radius 10R of the cutoff is larger than the half-width of the y-box."""
    return 10 * config.R > min(config.grid.L[:-1]) / 2


def apply_overrides(
    config: ScenarioConfig,
    axes: Mapping[str, float] | None = None,
    *,
    seed: int | None = None,
    name: str | None = None,
) -> ScenarioConfig:
    """A re-validated copy of ``config`` with sweep-axis values, seed or name replaced.

    Raises:
        ScenarioConfigError: For unknown axes or when the result no longer validates.
    """
    data = config.model_dump(by_alias=True)
    data["params"].pop("s_c", None)
    for axis, value in (axes or {}).items():
        if axis == "amplitude":
            data["initial"]["amplitude"] = value
        elif axis in ("sigma", "s"):
            data["params"][axis] = value
        elif axis == "R":
            data["R"] = value
        else:
            raise ScenarioConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    if seed is not None:
        data["seed"] = seed
    if name is not None:
        data["name"] = name
    return validate_scenario(data, source=f"scenario {data['name']}")


def build_grid(config: ScenarioConfig) -> Grid:
    return Grid.create(config.grid.n, config.grid.L)


def solve_ground_state(config: ScenarioConfig, grid: Grid | None = None) -> GroundStateResult:
    return petviashvili(config.params, grid or build_grid(config))


def build_initial_condition(
    config: ScenarioConfig,
    grid: Grid,
    ground_state: GroundStateResult | None = None,
) -> Field:
    """The initial datum described by ``config.initial`` on ``grid``.

    Raises:
        ScenarioConfigError: If a snapshot file is unreadable or does not match the grid.
        ConvergenceError: If a ground-state multiple is requested and the solve fails.
    """
    initial = config.initial
    y2 = grid.y_radius**2
    xn = grid.coords[-1]
    phase = np.exp(1j * initial.chirp * (y2 + xn**2)) if initial.chirp else 1.0

    if initial.kind == "gaussian":
        envelope = np.exp(-y2 / (2 * initial.y_width**2) - xn**2 / (2 * initial.xn_width**2))
        return Field(grid, initial.amplitude * envelope * phase)

    if initial.kind == "ring":
        # |y|^2 in front keeps the profile smooth on the axis
        radius = np.sqrt(y2)
        scale = max(initial.radius, 1.0)
        profile = (y2 / scale**2) * np.exp(-((radius - initial.radius) ** 2) / initial.y_width**2)
        return Field(grid, initial.amplitude * profile * np.exp(-xn**2 / (2 * initial.xn_width**2)) * phase)

    if initial.kind == "ground-state-multiple":
        q = ground_state or petviashvili(config.params, grid)
        return Field(grid, initial.factor * q.Q.physical() * phase)

    try:
        stored = read_snapshot(initial.path or "")
    except (FileNotFoundError, SnapshotFormatError) as exc:
        raise ScenarioConfigError(f"cannot load initial datum: {exc}") from exc
    if stored.grid != grid:
        raise ScenarioConfigError(
            f"snapshot grid {stored.grid.n}/{stored.grid.lengths} does not match scenario grid {grid.n}/{grid.lengths}"
        )
    return Field(grid, initial.amplitude * stored.values)


def needs_ground_state(config: ScenarioConfig, u0: Field | None) -> bool:
    if config.initial.kind == "ground-state-multiple":
        return True
    params = config.params
    if u0 is None or params.s_c <= 1e-12 or config.symmetry_class != "Sigma_N":
        return False
    return energy(u0, params) >= 0


def detection_status(detection: BlowupVerdict) -> RunStatus:
    if detection.detected:
        return "blowup-detected"
    if detection.reason == "domain too small":
        return "domain-breach"
    if detection.reason in ("non-finite field", "step collapse", "mass drift"):
        return "numerical-failure"
    return "completed"


def run_scenario(config: ScenarioConfig, storage: RunStorage, run: str | None = None) -> RunSummary:
    """Execute a scenario end to end and write its artifacts.

    Writes u0.fld (and ground_state.fld when Q was solved), series.csv, u_final.fld,
    summary.json and report.md under ``storage``/``run``. With t_end = 0 only the
    criteria verdict, the initial functionals and an empty series are written.

    Returns:
        The RunSummary that was saved.

    Raises:
        ScenarioConfigError: If the datum cannot be built or violates its symmetry class.
        ConvergenceError: If a required ground state does not converge.
    """
    run = run or config.name
    params = config.params
    grid = build_grid(config)
    logger.info("Running scenario %s (N=%d s=%g sigma=%g, s_c=%.4g)", run, params.N, params.s, params.sigma, params.s_c)

    q: GroundStateResult | None = None
    u0 = None if config.initial.kind == "ground-state-multiple" else build_initial_condition(config, grid)
    if needs_ground_state(config, u0):
        q = petviashvili(params, grid)
        storage.write_snapshot(run, "ground_state", q.Q, params.s, params.sigma, 0.0)
    if u0 is None:
        u0 = build_initial_condition(config, grid, q)

    try:
        verdict = check_criteria(u0, params, config.symmetry_class, q)
    except SymmetryError as exc:
        raise ScenarioConfigError(
            f"initial datum is not in the declared class {config.symmetry_class}: {exc}",
            details={"deviation": exc.deviation},
        ) from exc
    storage.write_snapshot(run, "u0", u0, params.s, params.sigma, 0.0)

    controller = StepController.from_sections(config.time, config.detection)
    summary = RunSummary(
        name=config.name,
        params=params,
        s_c=params.s_c,
        status="completed",
        exit_code=EXIT_CODES["completed"],
        verdict=verdict,
        detection=BlowupVerdict(),
        initial=verdict.inputs,
        R=config.R,
        seed=config.seed,
        dt_exponent=controller.exponent(params),
        dealias=controller.dealias,
    )

    if config.time.t_end == 0:
        storage.write_series(run, [])
        summary.message = "t_end = 0: criteria and initial functionals only"
        return _finish(storage, run, summary)

    weight = CylWeight(config.R, params.N)
    diagnostics = series_diagnostics(weight, params, config.quadrature.nodes)
    try:
        state = SimulationState.initial(u0, params, config.time.dt0)
        state, detection, rows = evolve(state, config.time.t_end, controller, diagnostics)
    except (QuadratureGateError, IdentityMismatchError, ConvergenceError, NonFiniteFieldError) as exc:
        logger.error("Scenario %s failed during evolution: %s", run, exc)
        summary.status = "numerical-failure"
        summary.exit_code = EXIT_CODES["numerical-failure"]
        summary.message = str(exc)
        return _finish(storage, run, summary)

    derivative = centered_difference([row.t for row in rows], [row.m_phi for row in rows])
    for row, value in zip(rows, derivative, strict=True):
        row.dmdt_fd = float(value)
    storage.write_series(run, rows)
    storage.write_snapshot(run, "u_final", state.u, params.s, params.sigma, state.t)

    status = detection_status(detection)
    summary.status = status
    summary.exit_code = EXIT_CODES[status]
    summary.detection = detection
    summary.growth_fit = fit_growth(detection.growth_times, detection.growth_norms)
    summary.final = snapshot(state.u, params)
    summary.samples = len(rows)
    summary.steps = state.steps
    summary.t_final = state.t
    summary.boundary_mass_final = state.boundary_mass
    summary.max_mass_drift = state.max_mass_drift
    summary.message = detection.reason or ""
    return _finish(storage, run, summary)


def _finish(storage: RunStorage, run: str, summary: RunSummary) -> RunSummary:
    storage.save_summary(run, summary)
    storage.write_report(run, render_run_report(summary))
    logger.info("Scenario %s finished with status %s", run, summary.status)
    return summary
