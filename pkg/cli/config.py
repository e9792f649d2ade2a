# =============================================================================
# CLI CONFIGURATION
# =============================================================================
"""
Process-level settings for the command-line front end.
Loads from environment variables (and an optional .env file) with defaults.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """CLI settings loaded from environment variables."""

    # ==========================================================================
    # Application
    # ==========================================================================
    APP_NAME: str = "wedgetrace"
    APP_VERSION: str = "0.1.0"

    # ==========================================================================
    # Workers
    # ==========================================================================
    WEDGETRACE_THREADS: int = 1

    # ==========================================================================
    # Logging
    # ==========================================================================
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"

    # ==========================================================================
    # Paths
    # ==========================================================================
    BASE_DIR: Path = Path(__file__).resolve().parent.parent
    CONFIG_DIR: Path = BASE_DIR / "config"
    OUTPUT_DIR: Path = BASE_DIR / "outputs"
    DEFAULT_CONFIG_FILE: str = "config_wedgetrace.json"

    @property
    def default_config_path(self) -> Path:
        return self.CONFIG_DIR / self.DEFAULT_CONFIG_FILE

    def thread_count(self, override: Optional[int] = None) -> int:
        """--threads wins over WEDGETRACE_THREADS; never below one."""
        return max(int(override if override is not None else self.WEDGETRACE_THREADS), 1)

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
