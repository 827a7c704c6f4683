"""Configuration settings for wassdyn."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings, read from ``WASSDYN_*`` environment variables and ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="WASSDYN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Runtime
    THREADS: int | None = Field(None, ge=1, description="Upper bound on worker threads.")
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Path | None = None

    # Numerics
    COMPRESSION_CAP: int = Field(200, ge=1, description="Default support cap for kernel operators.")
    RK4_STEP: float = Field(1.0 / 64.0, gt=0.0, le=1.0, description="Nominal RK4 step for ODE time-1 maps.")

    # Trace log
    TRACE: bool = False
    TRACE_DIR: Path | None = None

    @field_validator("LOG_LEVEL")
    @classmethod
    def _upper_level(cls, v: str) -> str:
        return v.upper()


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings instance; call ``get_settings.cache_clear()`` after changing the environment."""
    return Settings()
