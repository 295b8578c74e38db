"""Shared test fixtures for the fractional NLS lab test suite.

Unit tests run on small grids so the whole suite stays quick. Long runs that
reproduce the reference experiments live in tests/acceptance/ and only run
with FNLS_RUN_SLOW=1.
"""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from fnls_lab.config import LabConfig
from fnls_lab.models import ModelParams
from fnls_lab.spectral import Field, Grid
from fnls_lab.storage import RunStorage

ScenarioWriter = Callable[..., Path]


@pytest.fixture
def project_root() -> Path:
    """Return the project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture
def lab_config(tmp_path: Path) -> LabConfig:
    """Return a LabConfig writing into a temp directory."""
    return LabConfig(
        FNLS_OUTPUT_DIR=str(tmp_path / "runs"),
        FNLS_THREADS=1,
        FNLS_BOUNDARY_THRESHOLD=1e-8,
        FNLS_IDENTITY_TOLERANCE=5e-3,
        FNLS_QUADRATURE_NODES=64,
        LOG_LEVEL="DEBUG",
    )


@pytest.fixture
def run_storage(tmp_path: Path) -> RunStorage:
    """Return a RunStorage using a temp directory."""
    return RunStorage(tmp_path / "runs")


@pytest.fixture
def params_3d() -> ModelParams:
    """Mass-supercritical parameters with sigma <= s in three dimensions."""
    return ModelParams(N=3, s=0.7, sigma=0.6)


@pytest.fixture
def grid_3d() -> Grid:
    return Grid.cube(3, 16, 16.0)


@pytest.fixture
def gaussian_3d(grid_3d: Grid) -> Field:
    return Field.from_function(grid_3d, lambda x, y, z: np.exp(-0.5 * (x**2 + y**2 + z**2)))


@pytest.fixture
def write_scenario(tmp_path: Path) -> ScenarioWriter:
    """Write a small three-dimensional scenario file, with TOML lines appended or sections replaced."""

    def _write(name: str = "small", extra: str = "", **sections: str) -> Path:
        blocks = {
            "params": "N = 3\ns = 0.7\nsigma = 0.6",
            "grid": "n = [16, 16, 16]\nL = [16.0, 16.0, 16.0]",
            "initial": 'kind = "gaussian"\namplitude = 0.5',
            "time": "dt0 = 1e-3\nt_end = 0.02\nsample_interval = 0.005",
            "quadrature": "nodes = 48",
            "detection": "boundary_threshold = 1.0",
        }
        blocks.update(sections)
        text = f'name = "{name}"\nR = 2.0\n{extra}\n'
        text += "\n".join(f"[{key}]\n{body}\n" for key, body in blocks.items())
        path = tmp_path / f"{name}.toml"
        path.write_text(text)
        return path

    return _write
