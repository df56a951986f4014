from .settings import Config, logger

__all__ = ["Config", "logger"]
