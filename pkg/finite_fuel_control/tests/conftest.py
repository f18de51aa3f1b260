#!/usr/bin/env python3
"""
Shared fixtures: canonical parameters at alpha = delta = 1 and solved boundaries.
"""

import os
import sys

import pytest

HERE = os.path.dirname(__file__)
sys.path.insert(0, os.path.join(HERE, '..', 'src'))
sys.path.insert(0, os.path.join(HERE, '..', '..'))

from model import ProblemParams, lambda_star, lambda_dagger
from boundaries import solve_boundaries
from valuefn import PiecewiseValue


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long-running oracle and Monte Carlo checks')


def vshape_params(alpha: float = 1.0, delta: float = 1.0) -> ProblemParams:
    lam = 0.5 * (lambda_dagger(alpha, delta) + alpha * delta)
    return ProblemParams(lam=lam, alpha=alpha, delta=delta)


def vlambda_params(alpha: float = 1.0, delta: float = 1.0) -> ProblemParams:
    lam = 0.5 * (lambda_star(alpha, delta) + lambda_dagger(alpha, delta))
    return ProblemParams(lam=lam, alpha=alpha, delta=delta)


@pytest.fixture(scope='session')
def fixtures_dir():
    return os.path.join(HERE, 'fixtures')


@pytest.fixture(scope='session')
def vshape():
    return vshape_params()


@pytest.fixture(scope='session')
def vlambda():
    return vlambda_params()


@pytest.fixture(scope='session')
def high_cost():
    return ProblemParams(lam=1.5, alpha=1.0, delta=1.0)


@pytest.fixture(scope='session')
def legacy():
    return ProblemParams(lam=0.5 * lambda_star(1.0, 1.0), alpha=1.0, delta=1.0)


@pytest.fixture(scope='session')
def vshape_solution(vshape):
    return solve_boundaries(vshape)


@pytest.fixture(scope='session')
def vlambda_solution(vlambda):
    return solve_boundaries(vlambda)


@pytest.fixture(scope='session')
def vshape_value(vshape_solution):
    return PiecewiseValue(vshape_solution)


@pytest.fixture(scope='session')
def vlambda_value(vlambda_solution):
    return PiecewiseValue(vlambda_solution)


@pytest.fixture(scope='session')
def high_cost_value(high_cost):
    return PiecewiseValue(solve_boundaries(high_cost))
