# app/core/config.py
import os

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Logging Configuration
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")

    # Worker Configuration
    DYADIC_THREADS: int = Field(default=os.cpu_count() or 1, description="Maximum worker threads for chunked scans")
    DYADIC_CHUNK_CELLS: int = Field(default=1 << 22, description="Maximum cells evaluated per scan chunk")

    # Sampling Configuration
    DYADIC_SEED: int = Field(default=1, description="Default Monte Carlo seed")
    DYADIC_SAMPLE_COUNT: int = Field(default=1_000_000, description="Default Monte Carlo draw count")

    # Transfer Operator Configuration
    DYADIC_GRID_SIZE: int = Field(default=1 << 14, description="Default grid size for transfer operators")

    # Oracle Configuration
    DYADIC_GOLDEN_PATH: str = Field(default="app/data/golden.json", description="Stored oracle values for verify --level full")

    @field_validator("DYADIC_THREADS", "DYADIC_CHUNK_CELLS", "DYADIC_SAMPLE_COUNT")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("DYADIC_GRID_SIZE")
    @classmethod
    def _grid_power_of_two(cls, v: int) -> int:
        if v < 4 or v & (v - 1):
            raise ValueError("grid size must be a power of two >= 4")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def _upper_level(cls, v: str) -> str:
        return v.upper()


# Create settings instance
settings = Settings()
