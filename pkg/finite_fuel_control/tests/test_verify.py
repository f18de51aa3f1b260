#!/usr/bin/env python3
"""Tests for the verification battery"""

import json
import math

import numpy as np
import pytest

from valuefn import PiecewiseValue
from verify import (VerificationReport, VerificationGrid, check_variational, check_smooth_fit,
                    check_structure, check_containment, run_battery)

SMALL_GRID = VerificationGrid(nx=80, nc=40)


class ShiftedValue(PiecewiseValue):
    """Candidate lifted by a constant, breaks the obstacle condition"""

    def values(self, xs, c):
        return super().values(xs, c) + 0.1


def test_report_bookkeeping():
    report = VerificationReport(metadata={'run': 1})
    report.add('a', 1e-6, 0.0, None, True)
    report.add('b', 1e-6, 2.0, (0.5, 0.25), False, detail='too large')
    assert not report.passed
    assert [check.name for check in report.failures()] == ['b']

    other = VerificationReport(metadata={'extra': True})
    other.add('c', 0.0, np.float64(0.0), None, True)
    report.merge(other)
    record = json.loads(report.to_json())
    assert record['passed'] is False
    assert record['metadata'] == {'run': 1, 'extra': True}
    assert [check['name'] for check in record['checks']] == ['a', 'b', 'c']
    assert record['checks'][1]['location'] == [0.5, 0.25]


def test_grid_resolution(vshape_value):
    xs, cs = SMALL_GRID.resolve(vshape_value)
    assert len(xs) == 80 and len(cs) == 40
    assert xs[0] > 0 and cs[0] > 0
    assert cs[-1] == pytest.approx(2.0 * vshape_value.levels.c_bar)
    assert np.allclose(np.diff(cs), cs[0])


def test_structure_holds_in_vshape(vshape_value):
    report = check_structure(vshape_value)
    assert report.passed, [c.name for c in report.failures()]
    names = {check.name for check in report.checks}
    assert 'structure/q_zero_at_c_bar' in names
    assert 'structure/Fbar_Gbar_start' not in names
    assert not any('g0' in name for name in names)


def test_structure_holds_in_vlambda_shape(vlambda_value):
    report = check_structure(vlambda_value)
    assert report.passed, [c.name for c in report.failures()]
    assert any(check.name.startswith('structure/order/') for check in report.checks)


def test_smooth_fit(vshape_value, vlambda_value):
    for pv in (vshape_value, vlambda_value):
        report = check_smooth_fit(pv)
        assert report.passed, [(c.name, c.worst) for c in report.failures()]
        assert report.metadata['smooth_fit_rows'] > 10


def test_one_shot_containment(vlambda_value):
    report = check_containment(vlambda_value, points=10)
    assert report.passed, report.failures()


@pytest.mark.parametrize('name', ['vshape_value', 'vlambda_value'])
def test_one_shot_containment_with_default_sampling(name, request):
    pv = request.getfixturevalue(name)
    report = check_containment(pv)
    assert report.passed, [(c.worst, c.location) for c in report.failures()]
    assert report.metadata['containment_rows'] > 0


def test_variational_inequality_on_small_grid(vshape_value):
    report = check_variational(vshape_value, SMALL_GRID)
    assert report.passed, [(c.name, c.worst, c.location) for c in report.failures()]
    assert report.metadata['variational_grid']['points_checked'] > 0
    growth = report.metadata['growth_constant']
    assert math.isfinite(growth['intercept'])


def test_lifted_candidate_fails_obstacle(vshape_solution):
    report = check_variational(ShiftedValue(vshape_solution), SMALL_GRID)
    failed = {check.name for check in report.failures()}
    assert 'variational/obstacle' in failed


def test_high_cost_battery(high_cost_value):
    report = run_battery(high_cost_value, SMALL_GRID)
    assert report.passed, [(c.name, c.worst) for c in report.failures()]
    assert report.metadata['regime'] == 'HighCost'
    names = {check.name for check in report.checks}
    assert 'structure/vertical_boundary' in names
    assert 'smooth_fit/high_cost_value_at_boundary' in names


@pytest.mark.slow
def test_full_battery_in_vlambda_shape(vlambda_value):
    report = run_battery(vlambda_value, SMALL_GRID)
    assert report.passed, [(c.name, c.worst, c.location) for c in report.failures()]
    assert report.metadata['params']['lambda'] == pytest.approx(vlambda_value.params.lam)


@pytest.mark.slow
@pytest.mark.parametrize('name', ['vshape_value', 'vlambda_value'])
def test_full_battery_on_default_grid(name, request):
    pv = request.getfixturevalue(name)
    grid = VerificationGrid(nx=400, nc=200)
    report = run_battery(pv, grid)
    assert report.passed, [(c.name, c.worst, c.location) for c in report.failures()]
    assert report.metadata['variational_grid']['points_checked'] > 0
