"""Tests for scenario loading, initial data and the end-to-end scenario run."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from fnls_lab.exceptions import ScenarioConfigError
from fnls_lab.models import BlowupVerdict
from fnls_lab.scenario import (
    apply_overrides,
    build_grid,
    build_initial_condition,
    cutoff_exceeds_box,
    detection_status,
    load_scenario,
    needs_ground_state,
    run_scenario,
)
from fnls_lab.spectral import Field
from fnls_lab.storage import RunStorage, encode_snapshot

ScenarioWriter = Callable[..., Path]

NEGATIVE_ENERGY = 'kind = "gaussian"\namplitude = 5.0'
NO_TIME = "dt0 = 1e-3\nt_end = 0.0\nsample_interval = 0.005"


class TestLoadScenario:
    def test_loads_sections(self, write_scenario: ScenarioWriter) -> None:
        config = load_scenario(write_scenario())
        assert config.name == "small"
        assert config.params.N == 3
        assert config.grid.n == [16, 16, 16]
        assert config.R == 2.0
        assert config.quadrature.nodes == 48
        assert config.symmetry_class == "Sigma_N"

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ScenarioConfigError, match="not found"):
            load_scenario(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.toml"
        path.write_text("name = \n")
        with pytest.raises(ScenarioConfigError, match="not valid TOML"):
            load_scenario(path)

    def test_validation_errors_listed(self, write_scenario: ScenarioWriter) -> None:
        with pytest.raises(ScenarioConfigError) as exc_info:
            load_scenario(write_scenario(params="N = 3\ns = 1.5\nsigma = 0.6"))
        assert exc_info.value.details["errors"]

    @pytest.mark.parametrize(
        "sections",
        [
            {"grid": "n = [16, 16]\nL = [16.0, 16.0]"},
            {"grid": "n = [16, 12, 16]\nL = [16.0, 16.0, 16.0]"},
            {"grid": "n = [16, 32, 16]\nL = [16.0, 16.0, 16.0]"},
            {"params": "N = 3\ns = 0.7\nsigma = 2.0"},
            {"initial": 'kind = "from-file"'},
            {"initial": 'kind = "from-file"\npath = "missing.fld"'},
        ],
    )
    def test_inconsistent_scenarios(self, write_scenario: ScenarioWriter, sections: dict[str, str]) -> None:
        with pytest.raises(ScenarioConfigError):
            load_scenario(write_scenario(**sections))

    def test_cutoff_radius_bound(self, write_scenario: ScenarioWriter) -> None:
        path = write_scenario()
        path.write_text(path.read_text().replace("R = 2.0", "R = 4.0"))
        with pytest.raises(ScenarioConfigError):
            load_scenario(path)

    def test_cutoff_beyond_box_half_width_warns(
        self, write_scenario: ScenarioWriter, caplog: pytest.LogCaptureFixture
    ) -> None:
        with caplog.at_level(logging.WARNING, logger="fnls_lab.scenario"):
            config = load_scenario(write_scenario())
        assert cutoff_exceeds_box(config)
        assert "10R=20 exceeds min(L_y)/2=8" in caplog.text

    def test_cutoff_inside_box_is_silent(
        self, write_scenario: ScenarioWriter, caplog: pytest.LogCaptureFixture
    ) -> None:
        path = write_scenario()
        path.write_text(path.read_text().replace("R = 2.0", "R = 0.5"))
        with caplog.at_level(logging.WARNING, logger="fnls_lab.scenario"):
            config = load_scenario(path)
        assert not cutoff_exceeds_box(config)
        assert "exceeds" not in caplog.text

    def test_relative_snapshot_path(self, write_scenario: ScenarioWriter, tmp_path: Path) -> None:
        config = load_scenario(write_scenario())
        grid = build_grid(config)
        (tmp_path / "datum.fld").write_bytes(encode_snapshot(Field.zeros(grid), 0.7, 0.6, 0.0))
        loaded = load_scenario(write_scenario(initial='kind = "from-file"\npath = "datum.fld"'))
        assert loaded.initial.path == str(tmp_path / "datum.fld")


class TestOverrides:
    def test_axes(self, write_scenario: ScenarioWriter) -> None:
        config = load_scenario(write_scenario())
        changed = apply_overrides(config, {"amplitude": 2.0, "sigma": 0.5, "R": 1.5}, seed=3, name="cell")
        assert changed.initial.amplitude == 2.0
        assert changed.params.sigma == 0.5
        assert changed.R == 1.5
        assert changed.seed == 3
        assert changed.name == "cell"
        assert config.initial.amplitude == 0.5

    def test_unknown_axis(self, write_scenario: ScenarioWriter) -> None:
        with pytest.raises(ScenarioConfigError, match="unknown sweep axis"):
            apply_overrides(load_scenario(write_scenario()), {"dt0": 1.0})

    def test_override_revalidates(self, write_scenario: ScenarioWriter) -> None:
        with pytest.raises(ScenarioConfigError):
            apply_overrides(load_scenario(write_scenario()), {"R": 10.0})


class TestInitialCondition:
    def test_gaussian(self, write_scenario: ScenarioWriter) -> None:
        config = load_scenario(write_scenario())
        u0 = build_initial_condition(config, build_grid(config))
        assert np.max(np.abs(u0.physical())) == pytest.approx(0.5)

    def test_ring_vanishes_on_axis(self, write_scenario: ScenarioWriter) -> None:
        config = load_scenario(write_scenario(initial='kind = "ring"\nradius = 3.0'))
        u0 = build_initial_condition(config, build_grid(config))
        assert u0.physical()[8, 8, 8] == 0.0
        assert np.max(np.abs(u0.physical())) > 0.5

    def test_chirp_keeps_modulus(self, write_scenario: ScenarioWriter) -> None:
        plain = load_scenario(write_scenario())
        chirped = load_scenario(write_scenario(initial='kind = "gaussian"\namplitude = 0.5\nchirp = 0.3'))
        grid = build_grid(plain)
        a = build_initial_condition(plain, grid).physical()
        b = build_initial_condition(chirped, grid).physical()
        np.testing.assert_allclose(np.abs(b), np.abs(a), atol=1e-15)
        assert np.max(np.abs(b.imag)) > 0

    def test_from_file_grid_mismatch(self, write_scenario: ScenarioWriter, tmp_path: Path) -> None:
        config = load_scenario(write_scenario())
        small = build_grid(config).refined()
        (tmp_path / "datum.fld").write_bytes(encode_snapshot(Field.zeros(small), 0.7, 0.6, 0.0))
        from_file = load_scenario(write_scenario(initial='kind = "from-file"\npath = "datum.fld"'))
        with pytest.raises(ScenarioConfigError, match="does not match"):
            build_initial_condition(from_file, build_grid(from_file))

    def test_needs_ground_state(self, write_scenario: ScenarioWriter) -> None:
        config = load_scenario(write_scenario())
        grid = build_grid(config)
        assert needs_ground_state(config, build_initial_condition(config, grid))
        strong = load_scenario(write_scenario(initial=NEGATIVE_ENERGY))
        assert not needs_ground_state(strong, build_initial_condition(strong, grid))
        multiple = load_scenario(write_scenario(initial='kind = "ground-state-multiple"\nfactor = 1.1'))
        assert needs_ground_state(multiple, None)


class TestDetectionStatus:
    @pytest.mark.parametrize(
        ("verdict", "status"),
        [
            (BlowupVerdict(detected=True, reason="gradient growth"), "blowup-detected"),
            (BlowupVerdict(detected=True, reason="step collapse"), "blowup-detected"),
            (BlowupVerdict(reason="domain too small"), "domain-breach"),
            (BlowupVerdict(reason="step collapse"), "numerical-failure"),
            (BlowupVerdict(reason="non-finite field"), "numerical-failure"),
            (BlowupVerdict(reason="mass drift"), "numerical-failure"),
            (BlowupVerdict(), "completed"),
        ],
    )
    def test_mapping(self, verdict: BlowupVerdict, status: str) -> None:
        assert detection_status(verdict) == status


class TestRunScenario:
    def test_criteria_only(self, write_scenario: ScenarioWriter, run_storage: RunStorage) -> None:
        config = load_scenario(write_scenario(initial=NEGATIVE_ENERGY, time=NO_TIME))
        summary = run_scenario(config, run_storage)
        assert summary.status == "completed"
        assert summary.exit_code == 0
        assert summary.verdict.branch == "negative-energy"
        assert summary.final is None
        run_dir = run_storage.base_path / "small"
        assert (run_dir / "u0.fld").is_file()
        assert not (run_dir / "u_final.fld").exists()
        assert (run_dir / "series.csv").read_text().count("\n") == 1
        assert json.loads((run_dir / "summary.json").read_text())["status"] == "completed"
        assert (run_dir / "report.md").is_file()

    def test_short_evolution(self, write_scenario: ScenarioWriter, run_storage: RunStorage) -> None:
        config = load_scenario(write_scenario(initial=NEGATIVE_ENERGY))
        summary = run_scenario(config, run_storage, run="evolved")
        assert summary.status == "completed"
        assert summary.samples == 5
        assert summary.t_final == pytest.approx(0.02)
        assert summary.final is not None
        assert summary.dt_exponent == pytest.approx(1.3 / 0.7)
        series = run_storage.read_series("evolved")
        assert [row["t"] for row in series] == pytest.approx([0.0, 0.005, 0.01, 0.015, 0.02])
        assert np.isnan(series[0]["dMdt_fd"])
        assert np.isfinite(series[2]["dMdt_fd"])
        assert all(np.isfinite(row["rhs_m1_total"]) for row in series)
        assert run_storage.read_snapshot("evolved", "u_final").t == pytest.approx(0.02)

    def test_rerun_writes_identical_series(self, write_scenario: ScenarioWriter, run_storage: RunStorage) -> None:
        config = load_scenario(write_scenario(initial=NEGATIVE_ENERGY))
        run_scenario(config, run_storage, run="first")
        run_scenario(config, run_storage, run="second")
        first = (run_storage.base_path / "first" / "series.csv").read_bytes()
        second = (run_storage.base_path / "second" / "series.csv").read_bytes()
        assert first == second

    def test_symmetry_violation(self, write_scenario: ScenarioWriter, run_storage: RunStorage, tmp_path: Path) -> None:
        config = load_scenario(write_scenario())
        grid = build_grid(config)
        shifted = Field.from_function(grid, lambda x, y, z: np.exp(-0.5 * ((x - 1.0) ** 2 + y**2 + z**2)))
        (tmp_path / "datum.fld").write_bytes(encode_snapshot(shifted, 0.7, 0.6, 0.0))
        from_file = load_scenario(write_scenario(initial='kind = "from-file"\npath = "datum.fld"\namplitude = 5.0'))
        with pytest.raises(ScenarioConfigError, match="declared class"):
            run_scenario(from_file, run_storage)
