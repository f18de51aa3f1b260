#!/usr/bin/env python3
"""Tests for the Monte Carlo simulation of the candidate strategy"""

import math
from collections import defaultdict

import numpy as np
import pytest

from model import ProblemParams, ParameterError, DomainError, lambda_star, lambda_dagger
from boundaries import solve_boundaries
from valuefn import PiecewiseValue
from solver_config import SolverSettings
from simulate import SimConfig, StrategyView, TRUNCATION_LEVEL, simulate_path, mc_estimate, compare_states


def quick(**overrides) -> SimConfig:
    values = dict(dt=1e-3, horizon=2.0, paths=64, seed=7, block_size=16, threads=2)
    values.update(overrides)
    return SimConfig(**values)


def test_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(dt=0.0)
    with pytest.raises(ParameterError):
        SimConfig(paths=1)
    with pytest.raises(ParameterError):
        SimConfig(horizon=-1.0)
    with pytest.raises(ParameterError):
        SimConfig(block_size=0)


def test_default_horizon_reaches_truncation_level():
    cfg = SimConfig()
    T = cfg.horizon_for(2.0)
    assert math.exp(-2.0 * T) == pytest.approx(TRUNCATION_LEVEL)
    assert SimConfig(horizon=3.0).horizon_for(2.0) == 3.0


def test_config_from_settings():
    settings = SolverSettings(threads=3, dt=2e-4, paths=500, seed=11)
    cfg = SimConfig.from_settings(settings, paths=100, mirrored=True, horizon=None)
    assert (cfg.dt, cfg.paths, cfg.seed, cfg.threads) == (2e-4, 100, 11, 3)
    assert cfg.mirrored
    assert cfg.horizon is None


def test_start_in_stopping_region_pays_delta_x_squared(vshape_value, vshape):
    c = 0.5 * vshape_value.levels.c_bar
    x = 0.5 * vshape_value.slice(c).F
    estimate = mc_estimate(x, c, vshape_value, quick())
    assert estimate.mean == pytest.approx(vshape.delta * x * x, rel=1e-12)
    assert estimate.stderr == 0.0
    assert estimate.truncated == 0


def test_origin_costs_nothing(vshape_value):
    estimate = mc_estimate(0.0, 0.1, vshape_value, quick())
    assert estimate.mean == 0.0


def test_start_outside_solved_range(vshape_value):
    with pytest.raises(DomainError):
        mc_estimate(0.5, -0.1, vshape_value, quick())
    with pytest.raises(DomainError):
        mc_estimate(0.5, 10.0 * vshape_value.c_max, vshape_value, quick())


def test_fuel_accounting(vshape_value):
    c = 1.5 * vshape_value.levels.c_bar
    x = vshape_value.slice(c).G + 0.3
    estimate = mc_estimate(x, c, vshape_value, quick())
    assert np.allclose(estimate.spent + estimate.c_terminal, c, atol=1e-12)
    assert np.all(estimate.spent > 0.0)


def test_results_do_not_depend_on_thread_count(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    x = 0.5 * (vlambda_value.slice(c).F + vlambda_value.slice(c).G)
    one = mc_estimate(x, c, vlambda_value, quick(threads=1))
    four = mc_estimate(x, c, vlambda_value, quick(threads=4))
    assert np.array_equal(one.costs, four.costs)
    assert one.mean == four.mean


def test_mirrored_paths_use_the_same_draws(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    x = 0.5 * (sl.F + sl.G)
    plain = mc_estimate(x, c, vshape_value, quick())
    mirrored = mc_estimate(x, c, vshape_value, quick(mirrored=True))
    assert plain.n == mirrored.n == 64
    assert not np.array_equal(plain.costs, mirrored.costs)


def test_exhausting_jump_from_far_out(vshape_value):
    c = 0.3 * vshape_value.levels.c_bar
    x = vshape_value.slice(c).G + 1.0
    path = simulate_path(x, c, vshape_value, quick(), path_index=3)
    first = path.events[0]
    assert first.kind == 'jump'
    assert first.t == 0.0
    assert first.size == pytest.approx(c)
    assert path.spent == pytest.approx(c)
    assert path.c_terminal == 0.0
    assert path.spent_trace[0] == (0.0, first.size)


def test_reflection_at_G_above_c_bar(vshape_value):
    c = 2.0 * vshape_value.levels.c_bar
    x = vshape_value.slice(c).G - 1e-3
    path = simulate_path(x, c, vshape_value, quick(), path_index=0)
    kinds = {event.kind for event in path.events}
    assert 'reflect' in kinds
    assert path.events[-1].kind in ('stop', 'truncate')


def test_short_horizon_truncates(vshape_value, vshape):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    x = 0.5 * (sl.F + sl.G)
    estimate = mc_estimate(x, c, vshape_value, quick(horizon=1e-3, dt=1e-4))
    assert estimate.truncated > 0
    assert estimate.bias_budget > 0.0
    assert estimate.to_record()['truncated'] == estimate.truncated


def test_high_cost_jump_then_stop(high_cost_value, high_cost):
    x, c = high_cost.x_half_delta + 0.2, 0.5
    estimate = mc_estimate(x, c, high_cost_value, quick())
    assert estimate.mean == pytest.approx(high_cost_value.value(x, c), rel=1e-12)
    assert np.allclose(estimate.spent, 0.2)
    assert np.allclose(estimate.spent + estimate.c_terminal, c, atol=1e-12)
    assert np.allclose(estimate.c_terminal, 0.3)

    path = simulate_path(x, c, high_cost_value, quick())
    assert [event.kind for event in path.events] == ['jump', 'stop']
    assert path.c_terminal == pytest.approx(0.3)
    assert path.x_terminal == pytest.approx(high_cost.x_half_delta)


def test_high_cost_start_beyond_reach_spends_everything(high_cost_value, high_cost):
    x, c = high_cost.x_half_delta + 0.8, 0.5
    estimate = mc_estimate(x, c, high_cost_value, quick())
    assert np.allclose(estimate.spent, c)
    assert np.all(estimate.c_terminal == 0.0)
    assert estimate.mean == pytest.approx(high_cost_value.value(x, c), rel=1e-12)


def test_strategy_view_bounds(vlambda_value):
    view = StrategyView(vlambda_value)
    c_I = vlambda_value.levels.c_I
    C = np.array([0.0, 0.5 * c_I, 2.0 * c_I])
    F, G, Fb, Gb = view.bounds(C)
    assert F[0] == pytest.approx(vlambda_value.no_fuel.f0)
    assert math.isinf(G[0])
    assert np.isnan(Fb[0]) and np.isnan(Fb[2])
    assert F[1] < G[1] < Fb[1] < Gb[1]


def test_single_path_replays_the_estimate(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    sl = vlambda_value.slice(c)
    x = 0.5 * (sl.F + sl.G)
    cfg = quick()
    estimate = mc_estimate(x, c, vlambda_value, cfg)
    for k in (0, 21, 63):
        path = simulate_path(x, c, vlambda_value, cfg, path_index=k)
        assert path.cost == estimate.costs[k]
        assert path.c_terminal == estimate.c_terminal[k]
        assert all(event.path == k for event in path.events)
    with pytest.raises(ParameterError):
        simulate_path(x, c, vlambda_value, cfg, path_index=-1)


def test_leaving_second_interval_downward_spends_all_fuel(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    sl = vlambda_value.slice(c)
    x = 0.5 * (sl.Fbar + sl.Gbar)
    assert vlambda_value.classify_region(x, c).region == 'III'
    branch = vlambda_value.solution.branch
    estimate = mc_estimate(x, c, vlambda_value, quick(dt=1e-4, paths=128, record_events=True))

    by_path = defaultdict(list)
    for event in estimate.events:
        by_path[event.path].append(event)
    exhausted = 0
    for events in by_path.values():
        empty = False
        for event in events:
            if empty:
                assert event.c == 0.0
                continue
            if event.kind not in ('jump', 'reflect'):
                continue
            y = abs(event.x)
            if y < branch.Fbar(event.c):
                assert event.size == pytest.approx(event.c)
                exhausted += 1
            if event.size >= event.c - 1e-12:
                empty = True
            else:
                # anything short of exhaustion comes back onto G-bar
                landing = event.c - event.size
                assert y - event.size == pytest.approx(branch.Gbar(landing), abs=1e-6)
    assert exhausted > 0


@pytest.mark.parametrize('fraction', [0.2, 0.5, 0.8])
def test_repelled_paths_land_on_second_interval(fraction):
    lam = lambda_star(1.0, 1.0) + fraction * (lambda_dagger(1.0, 1.0) - lambda_star(1.0, 1.0))
    pv = PiecewiseValue(solve_boundaries(ProblemParams(lam=lam, alpha=1.0, delta=1.0)))
    levels = pv.levels
    c_top = min(levels.c_bar, levels.c_dagger, pv.c_max)
    if not levels.c_star < c_top:
        pytest.skip(f"c_star={levels.c_star} is not below c_bar={levels.c_bar}")
    c = 0.5 * (levels.c_star + c_top)
    x = pv.slice(c).G - 1e-3
    assert pv.classify_region(x, c).region == 'II'
    branch = pv.solution.branch
    estimate = mc_estimate(x, c, pv, quick(paths=128, record_events=True))

    landings = [event for event in estimate.events if event.kind == 'jump' and event.size < event.c]
    assert landings
    for event in landings:
        theta = event.c - event.size
        assert 0.0 < theta <= branch.c_I
        assert abs(event.x) - event.size == pytest.approx(branch.Gbar(theta), abs=1e-6)


def test_paired_comparison(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    result = compare_states((sl.G - 0.05, c), (sl.G - 0.1, c), vshape_value, quick())
    assert result['difference'] == pytest.approx(result['first_mean'] - result['second_mean'])
    assert result['stderr'] >= 0.0


@pytest.mark.slow
def test_estimate_matches_candidate_value(vshape_value):
    c = 0.5 * vshape_value.levels.c_bar
    sl = vshape_value.slice(c)
    x = 0.5 * (sl.F + sl.G)
    estimate = mc_estimate(x, c, vshape_value, SimConfig(dt=1e-4, paths=4000, seed=3, threads=4))
    target = vshape_value.value(x, c)
    assert abs(estimate.mean - target) <= 5.0 * estimate.stderr + 0.02 * (1.0 + target)


def _start_in(region: str, vshape_value, vlambda_value):
    if region in ('II', 'III', 'IVb'):
        pv = vlambda_value
        c_I = pv.levels.c_I
        c = 0.5 * c_I
        sl = pv.slice(c)
        if region == 'II':
            return pv, 0.5 * (sl.F + sl.G), c
        if region == 'III':
            return pv, 0.5 * (sl.Fbar + sl.Gbar), c
        theta = 0.25 * c_I
        return pv, pv.solution.branch.Gbar(theta) + (c - theta), c
    pv = vshape_value
    c_bar = pv.levels.c_bar
    if region == 'IVa':
        c, theta = 2.0 * c_bar, 1.5 * c_bar
        return pv, pv.slice(theta).G + (c - theta), c
    c = 0.5 * c_bar
    return pv, pv.slice(c).G + 1.0, c


@pytest.mark.slow
@pytest.mark.parametrize('region', ['II', 'III', 'IVa', 'IVb', 'IVc'])
def test_estimate_matches_candidate_value_by_region(region, vshape_value, vlambda_value):
    pv, x, c = _start_in(region, vshape_value, vlambda_value)
    assert pv.classify_region(x, c).region == region
    dt = 1e-4
    estimate = mc_estimate(x, c, pv, SimConfig(dt=dt, paths=4000, seed=11, threads=4))
    target = pv.value(x, c)
    assert abs(estimate.mean - target) < 3.0 * estimate.stderr + 5.0 * math.sqrt(dt) * (1.0 + target)
