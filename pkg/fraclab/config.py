"""RunConfig loading: defaults < FRACLAB_* environment < YAML file < explicit overrides."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Mapping

import yaml
from pydantic import ValidationError

from .exceptions import ConfigError
from .models import RunConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "FRACLAB_"


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """RunConfig keys set through FRACLAB_<KEY> variables."""
    environ = os.environ if environ is None else environ
    values = {}
    for key in RunConfig.model_fields:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            values[key] = environ[name]
    return values


def load_yaml(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a flat mapping of keys")
    return data


def load_run_config(
    path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """Merge the configuration layers and validate the result.

    Args:
        path: Optional YAML file with flat RunConfig keys.
        overrides: Values from command-line flags; None entries are ignored.
        environ: Environment to read FRACLAB_* keys from (defaults to os.environ).

    Raises:
        ConfigError: Unknown key, wrong type or unreadable file.
    """
    merged: dict[str, Any] = env_overrides(environ)
    if path is not None:
        merged.update(load_yaml(path))
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc
    logger.debug(f"Run configuration: {config.model_dump(mode='json')}")
    return config
