from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_NAME: str = "OPGG Fractional Punishment Optimizer"
    APP_VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"

    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "results"
    CSV_FLOAT_FORMAT: str = "%.17g"

    SIMPLEX_TOLERANCE: float = 1e-12
    STEP_DEVIATION_LIMIT: float = 1e-6
    BRUTEFORCE_MAX_N: int = 20

    SWEEP_WORKERS: int = 1

    PLATEAU_WINDOW: float = 10.0
    PLATEAU_TOLERANCE: float = 0.05
    KKT_TOLERANCE: float = 1e-4

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        allowed = ["development", "staging", "production"]
        if v.lower() not in allowed:
            raise ValueError(f"ENVIRONMENT must be one of: {allowed}")
        return v.lower()

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"LOG_LEVEL must be one of: {allowed}")
        return v.upper()

    @field_validator("SWEEP_WORKERS", "BRUTEFORCE_MAX_N")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v


settings = Settings()
