"""Configuration management for zs-scatter."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="ZS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Execution: 0 means one worker per CPU
    threads: int = 0
    output_format: str = "csv"

    # Experiment defaults
    default_length: float = 30.0
    discrete_length: float = 20.0
    xi_points: int = 1025
    xi_max: float = 20.0


# Global settings instance
settings = Settings()
