"""
Experiment Config Loader
Reads the YAML experiment file and layers environment and command-line overrides on top
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from src.errors import ConfigError
from src.models.config import ExperimentConfig
from src.utils.helpers import merge_dicts, split_csv_arg

logger = logging.getLogger('experiments')

ENV_OUT_DIR = 'DISPATCH_OUT_DIR'
ENV_LOG_LEVEL = 'DISPATCH_LOG_LEVEL'
ENV_WORKERS = 'DISPATCH_WORKERS'
ENV_SEED = 'DISPATCH_SEED'


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if data is None:
        raise ConfigError(f"{path}: config file is empty")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def env_overrides(env: Mapping[str, str]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if env.get(ENV_OUT_DIR):
        overrides['paths'] = {'out_dir': env[ENV_OUT_DIR]}
    if env.get(ENV_SEED):
        try:
            overrides['sim'] = {'seed': int(env[ENV_SEED])}
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env[ENV_SEED]!r}") from None
    return overrides


def cli_overrides(
    method: Optional[str] = None,
    vehicles: Optional[str] = None,
    activation: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None
) -> Dict[str, Any]:
    """Comma-separated axis flags replace the matching sweep axis."""
    overrides: Dict[str, Any] = {}
    sweep = {}
    if method:
        sweep['methods'] = split_csv_arg(method)
    if vehicles:
        sweep['vehicles'] = split_csv_arg(vehicles)
    if activation:
        sweep['activations'] = split_csv_arg(activation)
    if sweep:
        overrides['sweep'] = sweep
    if seed is not None:
        overrides['sim'] = {'seed': int(seed)}
    if out:
        overrides['paths'] = {'out_dir': out}
    return overrides


def workers_from_env(env: Optional[Mapping[str, str]] = None, default: int = 1) -> int:
    env = os.environ if env is None else env
    value = env.get(ENV_WORKERS)
    if not value:
        return default
    try:
        workers = int(value)
    except ValueError:
        raise ConfigError(f"{ENV_WORKERS} must be an integer, got {value!r}") from None
    if workers < 1:
        raise ConfigError(f"{ENV_WORKERS} must be >= 1, got {workers}")
    return workers


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        config = ExperimentConfig.from_dict(data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid config value: {e}") from None
    config.validate()
    return config


def load_config(
    path: Optional[Union[str, Path]] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """File, then environment, then command-line overrides; the later layer wins."""
    env = os.environ if env is None else env
    data = read_config_file(path) if path is not None else {'schema_version': 1}
    data = merge_dicts(data, env_overrides(env))
    if overrides:
        data = merge_dicts(data, overrides)

    config = build_config(data)
    logger.info(
        f"Loaded config '{config.name}' from {path or '<defaults>'}: "
        f"{len(config.cells())} cell(s), seed={config.sim.seed}"
    )
    return config
