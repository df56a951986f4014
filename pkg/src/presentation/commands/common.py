from pathlib import Path
from typing import List, Optional, Tuple

import click

from src.data.repositories import write_effective_config
from src.errors import ConfigException


def parse_int_list(value: str, option: str) -> List[int]:
    try:
        values = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise ConfigException(f"{option} must be a comma separated list of integers, got '{value}'")
    if not values:
        raise ConfigException(f"{option} must not be empty")
    return values


def parse_dims(value: str, option: str = "--dims") -> Tuple[int, int, int]:
    """'32' means 32^3; otherwise exactly three comma separated extents."""
    dims = parse_int_list(value, option)
    if len(dims) == 1:
        dims = dims * 3
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ConfigException(f"{option} needs one or three positive integers, got '{value}'")
    return tuple(dims)


def echo_config(text: str, out_dir: Optional[Path] = None) -> None:
    """Print the effective configuration and store it in the output directory."""
    click.echo(text.rstrip("\n"))
    if out_dir is not None:
        write_effective_config(out_dir, text)


def options_text(**options) -> str:
    return "".join(f"{key}={value}\n" for key, value in options.items() if value is not None)


def require(value, key: str):
    if value is None:
        raise ConfigException(f"Missing required setting '{key}' (flag or config file)")
    return value
