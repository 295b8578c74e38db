"""Parameter sweeps: the Cartesian product of axis values, one scenario run per cell.

Cells run in a bounded process pool and each writes its own directory under
``<sweep>/cells/``. A finished cell leaves a ``row.json``; rerunning the sweep
skips those cells, so an interrupted sweep resumes where it stopped. The merge
into ``sweep.csv`` is single-threaded and ordered by the product, not by
completion.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor

import scipy.fft

from fnls_lab.exceptions import LabError, ScenarioConfigError
from fnls_lab.models import EXIT_CODES, ScenarioConfig, SweepRow
from fnls_lab.scenario import SWEEP_AXES, apply_overrides, run_scenario
from fnls_lab.storage import RunStorage, format_float

logger = logging.getLogger(__name__)

MAX_CELLS = 512


def parse_axis(text: str) -> tuple[str, list[float]]:
    """Parse ``name=v1,v2,...`` from the command line.

    Raises:
        ScenarioConfigError: For a malformed axis, an unknown axis, or a non-numeric value.
    """
    name, sep, values = text.partition("=")
    name = name.strip()
    if not sep or not values.strip():
        raise ScenarioConfigError(f"axis {text!r} must look like name=v1,v2,...")
    if name not in SWEEP_AXES:
        raise ScenarioConfigError(f"unknown sweep axis {name!r}; expected one of {', '.join(SWEEP_AXES)}")
    try:
        return name, [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise ScenarioConfigError(f"axis {name} has a non-numeric value: {exc}") from exc


def expand_cells(axes: Mapping[str, list[float]]) -> list[dict[str, float]]:
    """Cartesian product of the axis values, axes in sorted order.

    Raises:
        ScenarioConfigError: If no axis is given, an axis is empty, or the product exceeds MAX_CELLS.
    """
    if not axes:
        raise ScenarioConfigError("a sweep needs at least one axis")
    names = sorted(axes)
    if any(not axes[name] for name in names):
        raise ScenarioConfigError("sweep axes must list at least one value")
    count = 1
    for name in names:
        count *= len(axes[name])
    if count > MAX_CELLS:
        raise ScenarioConfigError(f"sweep has {count} cells, more than the limit of {MAX_CELLS}")
    return [dict(zip(names, combo, strict=True)) for combo in itertools.product(*(axes[n] for n in names))]


def cell_id(cell: Mapping[str, float]) -> str:
    return "_".join(f"{name}={format_float(value)}" for name, value in sorted(cell.items()))


def _error_row(cell: Mapping[str, float], name: str, exit_code: int, message: str) -> SweepRow:
    return SweepRow(cell=name, axes=dict(cell), status="error", exit_code=exit_code, message=message)


def run_cell(template: ScenarioConfig, cell: Mapping[str, float], cells_dir: str, threads: int = 1) -> SweepRow:
    """Run one cell and record its verdict row; failures become error rows."""
    name = cell_id(cell)
    storage = RunStorage(cells_dir)
    try:
        with scipy.fft.set_workers(threads):
            config = apply_overrides(template, cell, name=name)
            summary = run_scenario(config, storage, run=name)
        row = SweepRow(
            cell=name,
            axes=dict(cell),
            status=summary.status,
            exit_code=summary.exit_code,
            branch=summary.verdict.branch,
            applicable=summary.verdict.applicable,
            detected=summary.detection.detected,
            t_detect=summary.detection.t_detect,
            energy=summary.initial.energy,
            message=summary.message,
        )
    except ScenarioConfigError as exc:
        logger.warning("Sweep cell %s rejected: %s", name, exc)
        row = _error_row(cell, name, EXIT_CODES["config-error"], str(exc))
    except LabError as exc:
        logger.warning("Sweep cell %s failed: %s", name, exc)
        row = _error_row(cell, name, EXIT_CODES["numerical-failure"], str(exc))
    storage.save_sweep_row(name, row)
    return row


def _run_cell(payload: tuple[dict, dict[str, float], str]) -> dict:
    # top-level so the process pool can pickle it
    template_data, cell, cells_dir = payload
    template = ScenarioConfig.model_validate(template_data)
    return run_cell(template, cell, cells_dir).model_dump(mode="json")


def run_sweep(
    template: ScenarioConfig,
    axes: Mapping[str, list[float]],
    storage: RunStorage,
    *,
    workers: int = 1,
    run: str | None = None,
) -> list[SweepRow]:
    """Run every cell not yet finished, then merge all rows into ``sweep.csv``.

    Args:
        template: Scenario the axis values are applied to.
        axes: Values per axis (amplitude, sigma, s, R).
        storage: Storage whose base holds the sweep directory.
        workers: Process pool size; 1 runs the cells in this process.
        run: Sweep directory name, defaults to the template name.

    Returns:
        One row per cell in product order.
    """
    run = run or template.name
    cells = expand_cells(axes)
    cells_dir = storage.run_path(run) / "cells"
    cell_storage = RunStorage(cells_dir)

    rows: dict[str, SweepRow] = {}
    pending: list[dict[str, float]] = []
    for cell in cells:
        stored = cell_storage.load_sweep_row(cell_id(cell))
        if stored is not None:
            rows[stored.cell] = stored
        else:
            pending.append(cell)
    logger.info("Sweep %s: %d cells, %d already finished, %d workers", run, len(cells), len(rows), workers)

    template_data = template.model_dump(by_alias=True)
    template_data["params"].pop("s_c", None)
    if workers <= 1 or len(pending) <= 1:
        for cell in pending:
            row = run_cell(template, cell, str(cells_dir))
            rows[row.cell] = row
    else:
        payloads = [(template_data, cell, str(cells_dir)) for cell in pending]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for data in pool.map(_run_cell, payloads):
                row = SweepRow.model_validate(data)
                rows[row.cell] = row

    ordered = [rows[cell_id(cell)] for cell in cells]
    storage.write_sweep(run, sorted(axes), ordered)
    return ordered


def sweep_axes(template: ScenarioConfig, cli_axes: list[str] | None = None) -> dict[str, list[float]]:
    """Axes from the scenario file, overridden per axis by command-line specs."""
    axes = {name: list(values) for name, values in template.sweep.items()}
    for text in cli_axes or []:
        name, values = parse_axis(text)
        axes[name] = values
    return axes
