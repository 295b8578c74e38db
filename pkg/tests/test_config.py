"""Tests for configuration management."""

from __future__ import annotations

import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from fnls_lab.config import LabConfig, get_config


class TestLabConfig:
    """Tests for the LabConfig pydantic-settings model."""

    def test_defaults(self) -> None:
        with patch.dict(os.environ, {}, clear=True):
            config = LabConfig(_env_file=None)
        assert config.output_dir == "fnls-runs"
        assert config.threads == 1
        assert config.boundary_threshold == 1e-8
        assert config.identity_tolerance == 5e-3
        assert config.quadrature_nodes == 64
        assert config.log_level == "INFO"

    def test_custom_values(self) -> None:
        config = LabConfig(FNLS_OUTPUT_DIR="/custom/runs", FNLS_THREADS=8, FNLS_QUADRATURE_NODES=96)
        assert config.output_dir == "/custom/runs"
        assert config.threads == 8
        assert config.quadrature_nodes == 96

    def test_populate_by_field_name(self) -> None:
        config = LabConfig(identity_tolerance=1e-3)
        assert config.identity_tolerance == 1e-3

    def test_zero_threads_raises(self) -> None:
        with pytest.raises(ValidationError):
            LabConfig(FNLS_THREADS=0)

    def test_nonpositive_tolerance_raises(self) -> None:
        with pytest.raises(ValidationError):
            LabConfig(FNLS_IDENTITY_TOLERANCE=0.0)

    def test_too_few_nodes_raises(self) -> None:
        with pytest.raises(ValidationError):
            LabConfig(FNLS_QUADRATURE_NODES=4)

    def test_from_environment_variables(self) -> None:
        env = {
            "FNLS_OUTPUT_DIR": "/env/runs",
            "FNLS_THREADS": "4",
            "FNLS_BOUNDARY_THRESHOLD": "1e-6",
            "LOG_LEVEL": "DEBUG",
        }
        with patch.dict(os.environ, env, clear=False):
            config = LabConfig()
            assert config.output_dir == "/env/runs"
            assert config.threads == 4
            assert config.boundary_threshold == 1e-6
            assert config.log_level == "DEBUG"

    def test_extra_fields_ignored(self) -> None:
        config = LabConfig(UNKNOWN_FIELD="should be ignored")
        assert not hasattr(config, "unknown_field")


class TestGetConfig:
    """Tests for the get_config() cached factory."""

    def test_get_config_returns_config(self) -> None:
        get_config.cache_clear()
        with patch.dict(os.environ, {"FNLS_OUTPUT_DIR": "/cached/runs"}, clear=False):
            config = get_config()
            assert isinstance(config, LabConfig)
            assert config.output_dir == "/cached/runs"
        get_config.cache_clear()

    def test_get_config_is_cached(self) -> None:
        get_config.cache_clear()
        c1 = get_config()
        c2 = get_config()
        assert c1 is c2
        get_config.cache_clear()
