"""
Configuration management following pydantic-settings practices
Reference: https://docs.pydantic.dev/latest/concepts/pydantic_settings/
"""

from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level settings with type validation and environment loading.

    Every field can be overridden with a ``BYZ_`` prefixed environment
    variable, e.g. ``BYZ_LOG_LEVEL=DEBUG``. Experiment parameters do not
    live here; they come from the experiment YAML file.

    Single Responsibility: Centralized configuration management
    """

    model_config = SettingsConfigDict(
        env_prefix="BYZ_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application settings
    app_name: str = "Byzantine Vision Ledger"
    version: str = "0.2.0"
    environment: str = "development"

    # Logging settings
    log_level: str = "INFO"
    log_json: bool = True

    # Contract roles
    cloud_identity: str = "cloud"

    # Synchronization node
    staleness_bound: float = 0.5  # seconds

    # Grid test oracle guard
    brute_force_limit: int = 200

    # Processing cloud
    oracle_workers: int = 1

    # Run export
    trajectory_stride: int = 12  # 120 Hz pose stream -> 10 Hz rows

    # Node API settings
    api_host: str = "127.0.0.1"
    api_port: int = 8000
    metrics_port: Optional[int] = None

    # Contract deployed by a standalone node (field trial parameters)
    node_f: int = 1
    node_n: int = 4
    node_d: float = 0.5
    node_delta: float = 0.4
    node_m: float = 1.3
    node_min_completed_sets: int = 1


# Global settings instance
settings = Settings()
