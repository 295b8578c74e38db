"""Tests for the blow-up criteria tool."""

from __future__ import annotations

import json
from collections.abc import Callable
from pathlib import Path

import numpy as np

from fnls_lab.config import LabConfig
from fnls_lab.spectral import Field, Grid
from fnls_lab.storage import encode_snapshot
from fnls_lab.tools.criteria import check_scenario_criteria

ScenarioWriter = Callable[..., Path]


class TestCheckScenarioCriteria:
    def test_negative_energy_verdict(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        path = write_scenario(initial='kind = "gaussian"\namplitude = 5.0')
        result = check_scenario_criteria(lab_config, str(path))
        assert result["exit_code"] == 0
        assert result["verdict"]["branch"] == "negative-energy"
        assert result["verdict"]["applicable"] is True
        stored = json.loads((Path(lab_config.output_dir) / "small" / "criteria.json").read_text())
        assert stored["branch"] == "negative-energy"

    def test_sigma_class(self, lab_config: LabConfig, write_scenario: ScenarioWriter) -> None:
        path = write_scenario(extra='symmetry_class = "Sigma"', initial='kind = "gaussian"\namplitude = 5.0')
        result = check_scenario_criteria(lab_config, str(path))
        assert result["verdict"]["branch"] == "sigma-class"
        assert result["verdict"]["applicable"] is False

    def test_asymmetric_datum_is_config_error(
        self, lab_config: LabConfig, write_scenario: ScenarioWriter, tmp_path: Path
    ) -> None:
        grid = Grid.cube(3, 16, 16.0)
        shifted = Field.from_function(grid, lambda x, y, z: np.exp(-0.5 * ((x - 1.0) ** 2 + y**2 + z**2)))
        (tmp_path / "datum.fld").write_bytes(encode_snapshot(shifted, 0.7, 0.6, 0.0))
        path = write_scenario(initial='kind = "from-file"\npath = "datum.fld"\namplitude = 5.0')
        result = check_scenario_criteria(lab_config, str(path))
        assert result["exit_code"] == 64
        assert result["error"] == "SymmetryError"
