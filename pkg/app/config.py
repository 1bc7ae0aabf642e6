from pydantic_settings import BaseSettings
from functools import lru_cache


class Settings(BaseSettings):
    # Application Settings
    APP_NAME: str = "Layout Bandit"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Search Limits
    EXHAUSTIVE_CAP: int = 1_000_000  # layouts scored by the exhaustive argmax
    LAYOUT_SPACE_LIMIT: int = 2 ** 32

    # Experiment Defaults
    DEFAULT_JOBS: int = 1
    LOCAL_REGRET_WINDOW: int = 2500
    LRT_PASSES: int = 5

    # Artifact Formats
    SNAPSHOT_VERSION: int = 1
    CSV_SCHEMA_VERSION: int = 1

    class Config:
        env_file = ".env"


@lru_cache()
def get_settings():
    return Settings()
