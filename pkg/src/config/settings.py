import logging
import os
from logging.config import dictConfig
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application
    ENVIRONMENT: str = "local"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "logs/hsganet.log"

    # Engine
    DEBUG_CHECKS: bool = False
    NUM_THREADS: int = 1
    DEFAULT_SEED: int = 0

    # Evaluation / benchmarks
    EVAL_WORKERS: int = 4
    BENCH_REPEATS: int = 3

    # Finite-difference gradient checks
    GRADCHECK_EPS: float = 1e-5
    GRADCHECK_TOL: float = 1e-4
    GRADCHECK_ATOL: float = 1e-6

    model_config = SettingsConfigDict(
        env_prefix="HSGANET_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @property
    def TESTING(self) -> bool:
        return os.environ.get("TESTING") == "True"


Config = Settings()

# NOTE: Use Config.<FIELD> elsewhere in the codebase, these are instance attributes.


def configure_logging():
    """Configure logging for the application."""
    handlers = ["console"] if Config.TESTING else ["console", "file"]
    log_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
            "detailed": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(module)s - %(funcName)s - %(lineno)d - %(message)s",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "formatter": "default",
                "level": Config.LOG_LEVEL,
            },
        },
        "loggers": {
            "app": {
                "handlers": handlers,
                "level": Config.LOG_LEVEL,
                "propagate": False,
            },
        },
        "root": {
            "handlers": handlers,
            "level": Config.LOG_LEVEL,
        },
    }
    if not Config.TESTING:
        # Ensure the logs directory exists
        Path(Config.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        log_config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "formatter": "detailed",
            "filename": Config.LOG_FILE,
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "level": Config.LOG_LEVEL,
        }
    dictConfig(log_config)
    return logging.getLogger("app")


# Initialize logger
logger = configure_logging()
