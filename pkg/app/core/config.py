"""
Application Configuration

This module handles all application settings and environment variables
for the observable logic toolchain.
"""

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env", case_sensitive=True, extra="ignore"
    )

    # Application settings
    APP_NAME: str = "Observable Logic Dual Toolchain"
    APP_VERSION: str = "1.0.0"

    # Monitoring settings
    LOG_LEVEL: str = "WARNING"

    # Deduction engine limits
    MAX_FACTS: int = 100000
    MAX_ROUNDS: int = 1000

    # Finite model enumeration
    MODEL_ENUMERATION_CAP: int = 1_000_000

    # Dataset generation
    DEFAULT_SEED: int = 42
    CONSISTENCY_RETRIES: int = 25
    MAX_SAMPLES: int = 10000
    GEN_WORKERS: int = 1

    # Bounded proof search
    SEARCH_DEPTH: int = 4

    # Terminal output
    OBS_COLOR: str = "auto"

    @field_validator("OBS_COLOR")
    @classmethod
    def check_color_mode(cls, v: str) -> str:
        v = v.strip().lower()
        if v not in ("auto", "never", "always"):
            raise ValueError("OBS_COLOR must be one of auto, never, always")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def check_log_level(cls, v: str) -> str:
        return v.strip().upper()


# Create settings instance
settings = Settings()
