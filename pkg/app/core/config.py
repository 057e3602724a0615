from typing import Any, List

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Environment
    ENVIRONMENT: str = Field(default="development")

    # API Configuration
    PROJECT_NAME: str = "Quiver Duality Engine"
    VERSION: str = "1.0.0"

    # CORS Configuration
    CORS_ORIGINS: Any = Field(default=["http://localhost:3000", "http://localhost:5173"])

    @field_validator("CORS_ORIGINS", mode="before")
    @classmethod
    def parse_cors_origins(cls, v):
        if isinstance(v, str):
            if v.strip() == "":
                return ["http://localhost:3000", "http://localhost:5173"]
            return [origin.strip() for origin in v.split(",") if origin.strip()]
        return v

    # Logging
    LOG_LEVEL: str = Field(default="INFO")

    # Identity checks
    DEFAULT_BOX: int = Field(default=3, ge=1)
    DEFAULT_TRIALS: int = Field(default=3, ge=1)
    DEFAULT_SEED: int = Field(default=0)
    JOBS: int = Field(default=1, ge=1)
    UNIT_SLACK: int = Field(default=1, ge=0)
    SLACK_AUDIT: bool = Field(default=True)

    # Generic equivariant points
    GENERIC_DENOMINATOR: int = Field(default=997, ge=2)
    GENERIC_SPREAD: int = Field(default=1000, ge=1)

    # Reports
    REPORT_DIR: str = Field(default="reports")

    @property
    def log_level_value(self) -> int:
        """Numeric logging level, INFO when the name is unknown"""
        import logging

        return getattr(logging, self.LOG_LEVEL.upper(), logging.INFO)

    @property
    def cors_origins_list(self) -> List[str]:
        return list(self.CORS_ORIGINS or [])

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"


# Create settings instance
settings = Settings()
