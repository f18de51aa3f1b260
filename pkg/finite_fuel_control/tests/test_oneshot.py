#!/usr/bin/env python3
"""Tests for the no-fuel and one-shot stopping problems"""

import math

import numpy as np
import pytest

from model import (UnsupportedRegimeError, NoSecondTangentError, OutOfRangeError,
                   MinorantError, f0)
from transform import NoFuelCost, Obstacle, TransformedObstacle, ScaleMap, critical_ys
from oneshot import (solve_V0, solve_one_shot, numeric_one_shot, solve_tangency_12,
                     solve_tangency_34, convex_minorant_numeric, oneshot_value, no_fuel_value)


def test_no_fuel_solution_matches_closed_form(vshape):
    solution = solve_V0(vshape)
    cost = NoFuelCost(vshape)
    for x in (0.0, 0.5, f0(vshape), 2.0, 4.0):
        assert solution.value(x) == pytest.approx(float(cost.value(x)), rel=1e-12, abs=1e-14)
    assert solution.stopping_set[0][0] == pytest.approx(0.0)
    assert solution.stopping_set[0][1] == pytest.approx(f0(vshape))


def test_no_fuel_value_is_symmetric(vlambda):
    assert no_fuel_value(-1.3, vlambda) == no_fuel_value(1.3, vlambda)


def test_high_cost_stops_everywhere_without_fuel(high_cost):
    solution = solve_V0(high_cost)
    assert solution.pieces[0].kind == 'obstacle'
    assert math.isinf(solution.pieces[0].y_hi)
    assert solution.value(1.5) == pytest.approx(high_cost.delta * 2.25)


@pytest.mark.parametrize('c', [0.05, 0.1, 0.2])
def test_tangency_12_residual_and_ordering(vshape, c):
    pair = solve_tangency_12(c, vshape)
    crit = critical_ys(c, vshape)
    assert pair.residual < 1e-10
    assert 1.0 <= pair.y1 < crit.y_c <= crit.y_v < pair.y2 <= crit.y_r * (1.0 + 1e-12)


def test_tangency_line_touches_both_obstacles(vshape):
    c = 0.1
    pair = solve_tangency_12(c, vshape)
    left = TransformedObstacle(Obstacle('left', vshape))
    right = TransformedObstacle(Obstacle('right1', vshape, c))
    H1, dH1, _ = left.at_y(pair.y1)
    H2, dH2, _ = right.at_y(pair.y2)
    assert float(dH1) == pytest.approx(pair.slope, rel=1e-9)
    assert float(dH2) == pytest.approx(pair.slope, rel=1e-9)
    assert float(H1) == pytest.approx(pair.slope * pair.y1 + pair.intercept, rel=1e-9, abs=1e-12)
    assert float(H2) == pytest.approx(pair.slope * pair.y2 + pair.intercept, rel=1e-9, abs=1e-12)


def test_second_bridge_in_vlambda_shape(vlambda):
    c = 0.1
    pair12 = solve_tangency_12(c, vlambda)
    pair34 = solve_tangency_34(c, vlambda, pair12)
    crit = critical_ys(c, vlambda)
    assert pair34.residual < 1e-10
    assert pair12.y2 < pair34.y1 < crit.y_r <= crit.y_m < pair34.y2


def test_second_bridge_absent_in_vshape(vshape):
    with pytest.raises(NoSecondTangentError):
        solve_tangency_34(0.1, vshape)


def test_tangency_rejects_legacy_regime(legacy):
    with pytest.raises(UnsupportedRegimeError):
        solve_tangency_12(0.2, legacy)


def test_analytic_and_numeric_minorants_agree(vshape):
    c = 0.2
    analytic = solve_one_shot(c, vshape)
    numeric = numeric_one_shot(c, vshape)
    bridge_a = analytic.linear_pieces[0]
    bridge_n = numeric.linear_pieces[0]
    assert bridge_n.y_lo == pytest.approx(bridge_a.y_lo, rel=1e-4)
    assert bridge_n.y_hi == pytest.approx(bridge_a.y_hi, rel=1e-4)
    for x in np.linspace(0.0, 3.0, 13):
        assert numeric.value(x) == pytest.approx(analytic.value(x), rel=1e-5, abs=1e-7)


def test_minorant_stays_below_obstacle(vlambda):
    c = 0.1
    solution = solve_one_shot(c, vlambda)
    H = TransformedObstacle(Obstacle('combined', vlambda, c))
    y = np.geomspace(1.0, 1e4, 400)
    values = H.at_y(y)[0]
    for yk, hk in zip(y, values):
        w = solution.W(float(yk))
        assert w <= 1e-12
        assert w <= hk + 1e-9 * (1.0 + abs(hk))


def test_one_shot_value_below_stopping_cost(vlambda):
    c = 0.3
    for x in np.linspace(0.0, 3.0, 31):
        cost = min(vlambda.delta * x * x, no_fuel_value(x - c, vlambda) + c)
        assert oneshot_value(x, c, vlambda) <= cost + 1e-10


def test_high_cost_one_shot_is_numeric(high_cost):
    solution = solve_one_shot(0.4, high_cost)
    assert solution.method == 'numeric'
    for x in (0.0, 0.2, 0.6, 1.5):
        cost = min(high_cost.delta * x * x, high_cost.delta * (x - 0.4) ** 2 + 0.4)
        assert solution.value(x) <= cost + 1e-10


def test_one_shot_value_domain(vshape):
    with pytest.raises(OutOfRangeError):
        oneshot_value(1.0, -0.1, vshape)
    assert oneshot_value(1.0, 0.0, vshape) == pytest.approx(no_fuel_value(1.0, vshape))


def test_numeric_minorant_of_convex_obstacle_is_the_obstacle():
    y = np.linspace(1.0, 9.0, 81)
    H = (y - 10.0) ** 2 / 100.0 - 1.0
    pieces = convex_minorant_numeric(y, H)
    assert len(pieces) == 1
    assert pieces[0].kind == 'obstacle'
    assert math.isinf(pieces[0].y_hi)


def test_numeric_minorant_bridges_two_wells():
    y = np.linspace(1.0, 12.0, 111)
    H = np.minimum((y - 2.0) ** 2 - 1.0, (y - 6.0) ** 2 - 2.0)
    pieces = convex_minorant_numeric(y, H)
    bridges = [piece for piece in pieces if piece.kind == 'linear' and not math.isinf(piece.y_hi)]
    assert bridges and bridges[0].A < 0
    assert 1.0 < bridges[0].y_lo < 2.0 < bridges[0].y_hi < 6.0
    tail = pieces[-1]
    assert math.isinf(tail.y_hi) and tail.A == 0.0
    assert tail.B == pytest.approx(-2.0, abs=1e-9)


def test_numeric_minorant_rejects_bad_samples():
    with pytest.raises(MinorantError):
        convex_minorant_numeric(np.array([1.0, 2.0]), np.array([0.0, -1.0]))
    with pytest.raises(MinorantError):
        convex_minorant_numeric(np.array([1.0, 3.0, 2.0]), np.array([0.0, -1.0, -2.0]))


def test_stopping_set_in_natural_scale(vshape):
    solution = solve_one_shot(0.1, vshape)
    scale = ScaleMap(vshape.alpha)
    first = solution.stopping_set[0]
    assert first[0] == pytest.approx(0.0, abs=1e-12)
    assert first[1] == pytest.approx(float(scale.psi_inv(solution.linear_pieces[0].y_lo)))
