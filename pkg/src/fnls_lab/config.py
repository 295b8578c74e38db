"""Configuration management for the fractional NLS lab.

Loads settings from environment variables and .env files using pydantic-settings.
Provides a cached singleton via get_config().
"""

from __future__ import annotations

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class LabConfig(BaseSettings):
    """Application configuration sourced from environment variables."""

    output_dir: str = Field("fnls-runs", alias="FNLS_OUTPUT_DIR")
    threads: int = Field(1, alias="FNLS_THREADS", ge=1)
    boundary_threshold: float = Field(1e-8, alias="FNLS_BOUNDARY_THRESHOLD", gt=0)
    identity_tolerance: float = Field(5e-3, alias="FNLS_IDENTITY_TOLERANCE", gt=0)
    quadrature_nodes: int = Field(64, alias="FNLS_QUADRATURE_NODES", ge=8)
    log_level: str = Field("INFO", alias="LOG_LEVEL")

    model_config = SettingsConfigDict(
        env_file=".env",
        extra="ignore",
        populate_by_name=True,
    )


@lru_cache(maxsize=1)
def get_config() -> LabConfig:
    """Return a cached singleton of LabConfig."""
    return LabConfig()
