import functools
import sys
from typing import Any, Callable, Dict, Union

import click
from pydantic import ValidationError

from src.config import logger

# Process exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FORMAT = 4
EXIT_NOT_FOUND = 5
EXIT_NUMERIC = 6


# Custom exceptions
class AppException(Exception):
    """Base exception for application-specific errors."""

    def __init__(self, exit_code: int, detail: Union[str, Dict[str, Any]]):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail


class ShapeException(AppException):
    """Exception for tensor shape or dimension mismatches."""

    def __init__(self, detail: str = "Shape mismatch"):
        super().__init__(exit_code=EXIT_USAGE, detail=detail)


class ConfigException(AppException):
    """Exception for invalid configuration values or keys."""

    def __init__(self, detail: Union[str, Dict[str, Any]] = "Invalid configuration"):
        super().__init__(exit_code=EXIT_CONFIG, detail=detail)


class FormatException(AppException):
    """Exception for malformed volume or checkpoint files."""

    def __init__(self, detail: str = "Malformed file"):
        super().__init__(exit_code=EXIT_FORMAT, detail=detail)


class TruncatedFileException(FormatException):
    """Exception for files whose payload ends before the header says it should."""

    def __init__(self, path: str, expected_end: int, actual_end: int):
        super().__init__(
            detail=f"{path}: truncated payload, expected data up to byte offset "
            f"{expected_end} but file ends at byte offset {actual_end}"
        )
        self.expected_end = expected_end
        self.actual_end = actual_end


class ResourceNotFoundException(AppException):
    """Exception for missing files, pairs or checkpoint tensors."""

    def __init__(self, detail: str = "Resource not found"):
        super().__init__(exit_code=EXIT_NOT_FOUND, detail=detail)


class GradientException(AppException):
    """Exception for misuse of the gradient tape or optimizer."""

    def __init__(self, detail: str = "Gradient computation failed"):
        super().__init__(exit_code=EXIT_NUMERIC, detail=detail)


class TrainingDivergedException(AppException):
    """Exception raised when the training loss stops being finite."""

    def __init__(self, epoch: int, step: int, pair_id: str, detail: str):
        super().__init__(
            exit_code=EXIT_NUMERIC,
            detail=f"Training diverged at epoch {epoch}, step {step} (pair {pair_id}): {detail}",
        )
        self.epoch = epoch
        self.step = step
        self.pair_id = pair_id


class GradientCheckFailure(AppException):
    """Exception for finite-difference checks exceeding the tolerance."""

    def __init__(self, detail: str = "Gradient check failed"):
        super().__init__(exit_code=EXIT_NUMERIC, detail=detail)


# Exception handlers
def app_exception_handler(exc: AppException) -> int:
    """Handler for application-specific exceptions."""
    logger.error(f"Application error: {exc.detail} (Exit code: {exc.exit_code})")
    click.echo(f"Error: {exc.detail}", err=True)
    return exc.exit_code


def pydantic_validation_exception_handler(exc: ValidationError) -> int:
    """Handler for Pydantic validation errors."""
    formatted_errors = [
        {
            "type": error["type"],
            "loc": error["loc"],
            "msg": error["msg"],
        }
        for error in exc.errors()
    ]
    logger.error(f"Pydantic validation error: {formatted_errors}")
    for error in formatted_errors:
        location = ".".join(str(part) for part in error["loc"])
        click.echo(f"Error: invalid config key '{location}': {error['msg']}", err=True)
    return EXIT_CONFIG


def general_exception_handler(exc: Exception) -> int:
    """Handler for all other exceptions."""
    logger.error(f"Unexpected error: {str(exc)}", exc_info=True)
    click.echo(f"Error: unexpected failure: {exc}", err=True)
    return EXIT_FAILURE


def handle_exceptions(func: Callable[..., Any]) -> Callable[..., Any]:
    """Run a command body and turn raised exceptions into exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except AppException as exc:
            sys.exit(app_exception_handler(exc))
        except ValidationError as exc:
            sys.exit(pydantic_validation_exception_handler(exc))
        except Exception as exc:
            sys.exit(general_exception_handler(exc))

    return wrapper


# Function to register exception handlers with the click application
def register_exception_handlers(group: click.Group) -> None:
    """Wrap every command callback of the group with the exception handlers."""
    for command in group.commands.values():
        if command.callback is not None:
            command.callback = handle_exceptions(command.callback)

    logger.debug("Exception handlers registered")
