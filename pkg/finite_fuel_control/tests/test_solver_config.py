#!/usr/bin/env python3
"""Tests for settings resolution from environment, config files and flags"""

import json

import pytest

from model import ParameterError
from solver_config import SolverSettings, load_config_file, resolve_run_config

ENV_NAMES = ('FUELCTRL_THREADS', 'FUELCTRL_DT', 'FUELCTRL_PATHS', 'FUELCTRL_SEED', 'FUELCTRL_DX',
             'FUELCTRL_TOL', 'FUELCTRL_CMAX', 'FUELCTRL_OUTPUT_DIR')


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV_NAMES:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_defaults_without_environment(clean_env):
    settings = SolverSettings.from_env()
    assert settings == SolverSettings()
    assert settings.c_max is None


def test_environment_values(clean_env):
    clean_env.setenv('FUELCTRL_THREADS', '8')
    clean_env.setenv('FUELCTRL_DT', '5e-4')
    clean_env.setenv('FUELCTRL_CMAX', '0.75')
    clean_env.setenv('FUELCTRL_OUTPUT_DIR', 'runs')
    settings = SolverSettings.from_env()
    assert (settings.threads, settings.dt, settings.c_max, settings.output_dir) == (8, 5e-4, 0.75, 'runs')


@pytest.mark.parametrize('name, raw', [('FUELCTRL_DT', 'fast'), ('FUELCTRL_PATHS', '1.5'), ('FUELCTRL_THREADS', '0')])
def test_invalid_environment_values(clean_env, name, raw):
    clean_env.setenv(name, raw)
    with pytest.raises(ParameterError):
        SolverSettings.from_env()


def test_merge_skips_none_and_unknown_keys():
    merged = SolverSettings().merge({'dx': 0.05, 'paths': None, 'lambda': 0.8})
    assert merged.dx == 0.05
    assert merged.paths == SolverSettings().paths
    assert 'lambda' not in merged.to_dict()


def test_load_config_file_errors(tmp_path):
    with pytest.raises(ParameterError, match='not found'):
        load_config_file(str(tmp_path / 'missing.json'))
    broken = tmp_path / 'broken.json'
    broken.write_text('{"lambda": ')
    with pytest.raises(ParameterError, match='Invalid JSON'):
        load_config_file(str(broken))
    listed = tmp_path / 'list.json'
    listed.write_text('[1, 2]')
    with pytest.raises(ParameterError, match='JSON object'):
        load_config_file(str(listed))


def test_precedence_flags_over_file_over_env(clean_env, tmp_path):
    clean_env.setenv('FUELCTRL_DX', '0.2')
    clean_env.setenv('FUELCTRL_SEED', '99')
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'lambda': 0.7, 'alpha': 1.0, 'delta': 1.0,
                                'grid': {'dx': 0.02, 'jacobi': True}, 'simulation': {'seed': 5}}))
    run = resolve_run_config({'seed': 11, 'delta': 2.0}, str(path))
    assert run.settings.dx == 0.02
    assert run.settings.seed == 11
    assert run.settings.grid['jacobi'] is True
    assert (run.params.lam, run.params.alpha, run.params.delta) == (0.7, 1.0, 2.0)


def test_missing_parameters_are_named(clean_env):
    with pytest.raises(ParameterError, match='Missing parameters: alpha, delta'):
        resolve_run_config({'lambda': 0.8})
    assert resolve_run_config({'lambda': 0.8}, require_params=False).params is None


def test_invalid_parameters_from_file(clean_env, fixtures_dir):
    with pytest.raises(ParameterError):
        resolve_run_config({}, f'{fixtures_dir}/test_params_invalid.json')
