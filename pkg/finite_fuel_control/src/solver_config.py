#!/usr/bin/env python3
"""
Solver settings from the environment, JSON config files and command-line flags.
Flags override file values, which override environment defaults.
"""

import os
import sys
import json
from dataclasses import dataclass, field, asdict, replace
from typing import Any, Dict, Optional

from dotenv import load_dotenv

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import ProblemParams, ParameterError

load_dotenv()

logger = setup_solver_logging('solver_config')


def _env_float(name: str, default: Optional[float]) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return float(raw)
    except ValueError:
        raise ParameterError(f"{name} must be a number, got {raw!r}")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{name} must be an integer, got {raw!r}")


@dataclass
class SolverSettings:
    threads: int = 4
    dt: float = 1e-4
    paths: int = 10000
    seed: int = 20240601
    dx: float = 0.01
    tol: float = 1e-10
    c_max: Optional[float] = None
    x_max: Optional[float] = None
    output_dir: str = '.'
    grid: Dict[str, Any] = field(default_factory=dict)
    simulation: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_env(cls) -> 'SolverSettings':
        """Defaults from FUELCTRL_* variables (a .env file is honoured)"""
        settings = cls(threads=_env_int('FUELCTRL_THREADS', 4),
                       dt=_env_float('FUELCTRL_DT', 1e-4),
                       paths=_env_int('FUELCTRL_PATHS', 10000),
                       seed=_env_int('FUELCTRL_SEED', 20240601),
                       dx=_env_float('FUELCTRL_DX', 0.01),
                       tol=_env_float('FUELCTRL_TOL', 1e-10),
                       c_max=_env_float('FUELCTRL_CMAX', None),
                       output_dir=os.getenv('FUELCTRL_OUTPUT_DIR', '.'))
        if settings.threads < 1:
            raise ParameterError("FUELCTRL_THREADS must be at least 1")
        return settings

    def merge(self, overrides: Dict[str, Any]) -> 'SolverSettings':
        """Copy with every non-None override applied"""
        known = {k: v for k, v in overrides.items() if v is not None and k in self.__dataclass_fields__}
        return replace(self, **known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunConfig:
    params: Optional[ProblemParams]
    settings: SolverSettings


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON run configuration.

    Args:
        path: File with "lambda", "alpha", "delta" and optional "grid"/"simulation" blocks

    Returns:
        Parsed dictionary
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ParameterError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParameterError(f"Invalid JSON in {path}: {str(e)}")
    if not isinstance(data, dict):
        raise ParameterError(f"Config file {path} must hold a JSON object")
    return data


def resolve_run_config(flags: Dict[str, Any], config_path: Optional[str] = None,
                       require_params: bool = True) -> RunConfig:
    """
    Combine environment defaults, an optional config file and flags.

    Args:
        flags: Flag values keyed like SolverSettings fields plus 'lambda', 'alpha', 'delta'
        config_path: Optional JSON config file
        require_params: Raise when the model parameters are incomplete

    Returns:
        RunConfig
    """
    settings = SolverSettings.from_env()
    file_data: Dict[str, Any] = load_config_file(config_path) if config_path else {}

    if file_data:
        grid = file_data.get('grid') or {}
        simulation = file_data.get('simulation') or {}
        settings = settings.merge({'dx': grid.get('dx'), 'tol': grid.get('tol'),
                                   'c_max': grid.get('c_max'), 'x_max': grid.get('x_max'),
                                   'dt': simulation.get('dt'), 'paths': simulation.get('paths'),
                                   'seed': simulation.get('seed')})
        settings.grid = dict(grid)
        settings.simulation = dict(simulation)
        logger.info(f"Loaded config file {config_path}")

    settings = settings.merge({k: v for k, v in flags.items() if k not in ('lambda', 'alpha', 'delta')})

    raw = {key: file_data.get(key) for key in ('lambda', 'alpha', 'delta')}
    for key in ('lambda', 'alpha', 'delta'):
        if flags.get(key) is not None:
            raw[key] = flags[key]
    if all(value is not None for value in raw.values()):
        params = ProblemParams.from_dict(raw)
    elif require_params:
        missing = [key for key, value in raw.items() if value is None]
        raise ParameterError(f"Missing parameters: {', '.join(missing)}")
    else:
        params = None
    return RunConfig(params, settings)
