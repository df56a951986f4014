"""
Plain-text key=value run configuration.

Keys are NetworkConfig fields plus epochs, data, val_data and out. Lists are
comma separated. Values given on the command line win over the file.
"""

import io
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from src.config import logger
from src.data.schemas import NetworkConfig, RunConfig
from src.errors import ConfigException, ResourceNotFoundException

run_config_logger = logger.getChild("run_config")

RUN_KEYS = ("epochs", "data", "val_data", "out")
CONFIG_FILENAME = "config.txt"


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    values = dotenv_values(stream=io.StringIO(text))
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigException(f"{source}: keys without a value: {', '.join(missing)}")
    return dict(values)


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ResourceNotFoundException(f"Config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def network_config_text(config: NetworkConfig) -> str:
    return "".join(f"{key}={_format_value(value)}\n" for key, value in config.model_dump().items())


def network_config_from_values(values: Mapping[str, Any], source: str = "<config>") -> NetworkConfig:
    try:
        return NetworkConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"'{'.'.join(str(p) for p in err['loc']) or 'config'}': {err['msg']}" for err in exc.errors()
        )
        raise ConfigException(f"{source}: invalid configuration: {problems}") from exc


def build_run_config(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    source: str = "<config>",
) -> RunConfig:
    """Merge file values with non-None overrides and validate every key."""
    merged: Dict[str, Any] = dict(file_values or {})
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})
    run_values = {key: merged.pop(key) for key in RUN_KEYS if key in merged}
    network = network_config_from_values(merged, source)
    try:
        return RunConfig(network=network, **run_values)
    except ValidationError as exc:
        problems = "; ".join(f"'{err['loc'][0]}': {err['msg']}" for err in exc.errors())
        raise ConfigException(f"{source}: invalid configuration: {problems}") from exc


def load_run_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    file_values = read_config_file(path) if path is not None else {}
    config = build_run_config(file_values, overrides, str(path) if path else "<flags>")
    run_config_logger.debug(f"Effective run config: {config.model_dump()}")
    return config


def run_config_text(config: RunConfig) -> str:
    lines = [network_config_text(config.network)]
    for key in RUN_KEYS:
        value = getattr(config, key)
        if value is not None:
            lines.append(f"{key}={value}\n")
    return "".join(lines)


def write_effective_config(out_dir: Union[str, Path], text: str) -> Path:
    """Store the configuration a command ran with next to its outputs."""
    path = Path(out_dir) / CONFIG_FILENAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
