#!/usr/bin/env python3
"""Tests for the candidate value function and its regions"""

import math

import numpy as np
import pytest

from model import DomainError
from transform import NoFuelCost, Obstacle
from valuefn import PiecewiseValue, REGIONS


def test_value_without_fuel_is_the_no_fuel_cost(vshape_value, vshape):
    cost = NoFuelCost(vshape)
    for x in (0.0, 0.7, 2.5):
        assert vshape_value.value(x, 0.0) == pytest.approx(float(cost.value(x)))


def test_value_is_even_and_nonnegative(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    for x in np.linspace(0.0, 3.0, 16):
        q = vlambda_value.value(x, c)
        assert q >= 0.0
        assert vlambda_value.value(-x, c) == q


def test_negative_fuel_is_rejected(vshape_value):
    with pytest.raises(DomainError):
        vshape_value.value(0.5, -1e-3)
    with pytest.raises(DomainError):
        vshape_value.classify_region(0.5, -1e-3)
    with pytest.raises(DomainError):
        vshape_value.marginal_U(0.5, 0.0)


def test_stopping_region_pays_delta_x_squared(vshape_value, vshape):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    for x in np.linspace(0.0, sl.F, 5):
        assert vshape_value.classify_region(x, c).region == 'I'
        assert vshape_value.value(x, c) == pytest.approx(vshape.delta * x * x)


def test_smooth_fit_at_F(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    F = vshape_value.slice(c).F
    gap = abs(vshape_value.piece_value('II', F, c) - vshape_value.piece_value('I', F, c))
    slope_gap = abs(vshape_value.piece_dx('II', F, c) - vshape_value.piece_dx('I', F, c))
    assert gap < 1e-9
    assert slope_gap < 1e-6


def test_continuity_at_G(vshape_value):
    for c in (0.3 * vshape_value.levels.c_bar, 2.0 * vshape_value.levels.c_bar):
        G = vshape_value.slice(c).G
        inside = vshape_value.value(G - 1e-9, c)
        outside = vshape_value.value(G + 1e-9, c)
        assert inside == pytest.approx(outside, abs=1e-6)


def test_continuity_at_Fbar(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    Fbar = vlambda_value.slice(c).Fbar
    assert vlambda_value.value(Fbar - 1e-9, c) == pytest.approx(vlambda_value.value(Fbar + 1e-9, c), abs=1e-6)


def test_regions_in_vlambda_shape(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    sl = vlambda_value.slice(c)
    assert sl.communicating
    assert vlambda_value.classify_region(0.5 * sl.F, c).region == 'I'
    assert vlambda_value.classify_region(0.5 * (sl.F + sl.G), c).region == 'II'
    assert vlambda_value.classify_region(0.5 * (sl.Fbar + sl.Gbar), c).region == 'III'
    far = vlambda_value.classify_region(sl.Gbar + 5.0, c)
    assert far.region == 'IVc'
    assert far.zeta == c


def test_reflecting_landing_above_c_bar(vshape_value):
    c_bar = vshape_value.levels.c_bar
    c = 2.0 * c_bar
    G = vshape_value.slice(c).G
    tag = vshape_value.classify_region(G + 0.001, c)
    assert tag.region == 'IVa'
    assert c_bar <= tag.landing_fuel < c
    assert tag.zeta == pytest.approx(c - tag.landing_fuel)
    # the landing point sits on G at the remaining fuel
    assert G + 0.001 - tag.zeta == pytest.approx(vshape_value.slice(tag.landing_fuel).G, abs=1e-8)
    assert vshape_value.zeta(G + 0.001, c) == tag.zeta
    assert vshape_value.zeta(0.0, c) == 0.0


def test_values_matches_value(vlambda_value):
    for c in (0.3 * vlambda_value.levels.c_I, 1.5 * vlambda_value.levels.c_bar):
        xs = np.linspace(0.0, 4.0, 81)
        row = vlambda_value.values(xs, c)
        single = np.array([vlambda_value.value(x, c) for x in xs])
        assert np.allclose(row, single, rtol=1e-12, atol=1e-12)


def test_value_below_obstacles(vshape_value, vshape):
    cost = NoFuelCost(vshape)
    for c in (0.2 * vshape_value.levels.c_bar, 1.5 * vshape_value.levels.c_bar):
        for x in np.linspace(0.0, 3.0, 31):
            q = vshape_value.value(x, c)
            assert q <= vshape.delta * x * x + 1e-9
            assert q <= float(cost.value(x - c)) + c + 1e-9


def test_more_fuel_never_costs_more(vshape_value):
    cs = np.linspace(0.01, 2.5 * vshape_value.levels.c_bar, 12)
    for x in (0.3, 0.8, 1.5, 2.5):
        row = [vshape_value.value(x, float(c)) for c in cs]
        assert np.all(np.diff(row) <= 1e-8)


def test_marginal_is_one_while_acting(vshape_value):
    c = 2.0 * vshape_value.levels.c_bar
    G = vshape_value.slice(c).G
    assert vshape_value.marginal_U(G + 0.5, c) == 1.0
    U, flag = vshape_value.marginal_U(G, c, with_flag=True)
    assert flag
    assert U == pytest.approx(1.0, abs=1e-4)


def test_marginal_matches_finite_difference(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    x = 0.5 * (sl.F + sl.G)
    h = 1e-5
    fd = (vshape_value.piece_value('II', x + h, c + h) - vshape_value.piece_value('II', x - h, c - h)) / (2.0 * h)
    assert vshape_value.marginal_U(x, c) == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_high_cost_value(high_cost_value, high_cost):
    hd = high_cost.x_half_delta
    c = 0.4
    assert high_cost_value.value(0.3, c) == pytest.approx(high_cost.delta * 0.09)
    assert high_cost_value.value(hd + 0.2, c) == pytest.approx(1.0 / (4.0 * high_cost.delta) + 0.2)
    assert high_cost_value.value(hd + 1.0, c) == pytest.approx(high_cost.delta * (hd + 1.0 - c) ** 2 + c)
    assert high_cost_value.classify_region(hd + 1.0, c).zeta == c
    assert high_cost_value.classify_region(hd - 0.1, c).region == 'I'
    with pytest.raises(DomainError):
        high_cost_value.slice(c)


def test_high_cost_value_is_the_minimum_over_jumps(high_cost_value, high_cost):
    c = 0.7
    for x in np.linspace(0.0, 2.5, 26):
        u = np.linspace(0.0, min(c, x), 2001)
        best = float(np.min(high_cost.delta * (x - u) ** 2 + u))
        assert high_cost_value.value(x, c) == pytest.approx(best, abs=1e-6)


def test_near_nonsmooth(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    assert vshape_value.near_nonsmooth(sl.F + 1e-4, c, 1e-3, 1e-3)
    assert not vshape_value.near_nonsmooth(0.5 * sl.F, c, 1e-3, 1e-3)
    assert vshape_value.near_nonsmooth(0.1, vshape_value.levels.c_bar, 1e-3, 1e-3)


def test_surface_frame_and_coefficients(vlambda_value):
    c_I = vlambda_value.levels.c_I
    frame = vlambda_value.surface_frame([0.2, 1.0, 2.0], [0.0, 0.5 * c_I])
    assert list(frame.columns) == ['x', 'c', 'Q', 'region', 'U']
    assert len(frame) == 6
    assert set(frame['region']) <= set(REGIONS)
    assert math.isnan(frame.loc[0, 'U'])
    summary = vlambda_value.coefficient_summary([0.25 * c_I, 2.0 * c_I])
    assert summary['A_tilde'][0] is not None
    assert summary['A_tilde'][1] is None


def test_hstar_r_without_second_component_is_h_r(vshape_value, vshape):
    assert vshape_value.hstar_r(1.5, 0.2) == pytest.approx(float(Obstacle('right', vshape, 0.2).value(1.5)))


def test_from_params(vshape):
    value = PiecewiseValue.from_params(vshape)
    assert value.levels.c_bar > 0
