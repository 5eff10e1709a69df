"""Process settings with environment variable support."""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables.

    These never influence simulation results; experiment parameters live in
    :class:`chainscale.config.scenario.ScenarioConfig`. All variables are
    prefixed with CHAINSCALE_.

    Example .env file:
        CHAINSCALE_LOG_LEVEL=DEBUG
        CHAINSCALE_LOG_FORMAT=json
        CHAINSCALE_OUTPUT_DIR=./runs
        CHAINSCALE_JOBS=4
    """

    model_config = SettingsConfigDict(
        env_prefix="CHAINSCALE_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    debug: bool = Field(default=False, description="Enable debug mode (DEBUG logging)")
    log_level: str = Field(default="INFO", description="Logging level")
    log_format: Literal["pretty", "json", "auto"] = Field(
        default="auto",
        description="Logging output format: pretty, json, or auto (json when stderr is not a TTY)",
    )
    output_dir: Path = Field(
        default=Path("runs"),
        description="Default root directory for observation and report files",
    )
    jobs: int = Field(
        default=1,
        ge=1,
        description="Default number of parallel workers for sweeps",
    )

    @property
    def effective_log_level(self) -> str:
        return "DEBUG" if self.debug else self.log_level


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
