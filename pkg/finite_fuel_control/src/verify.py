#!/usr/bin/env python3
"""
Verification battery for the candidate value function.

Checks the variational inequality on an (x, c) grid with finite differences,
smooth fit across every free boundary, and the structural hypotheses on the
boundaries and fuel levels.
"""

import os
import sys
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import Regime, FuelControlError, compute_constants
from transform import ScaleMap
from oneshot import solve_one_shot
from boundaries import C_START
from valuefn import PiecewiseValue

logger = setup_solver_logging('verify')

SLACK_RTOL = 1e-6
FD_STEP = 1e-3
SMOOTH_FIT_RTOL = 1e-6
LIMIT_TOL = 1e-3


@dataclass
class CheckResult:
    name: str
    tolerance: float
    worst: float
    location: Optional[Tuple[float, float]]
    passed: bool
    detail: str = ''


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, tolerance: float, worst: float,
            location: Optional[Tuple[float, float]], passed: bool, detail: str = '') -> CheckResult:
        result = CheckResult(name, tolerance, float(worst), location, bool(passed), detail)
        self.checks.append(result)
        marker = '✅' if result.passed else '❌'
        logger.info(f"{marker} {name}: worst={result.worst} (tol {tolerance}) at {location}")
        return result

    def merge(self, other: 'VerificationReport') -> 'VerificationReport':
        self.checks.extend(other.checks)
        self.metadata.update(other.metadata)
        return self

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_record(self) -> Dict[str, Any]:
        return {'passed': self.passed,
                'metadata': self.metadata,
                'checks': [asdict(check) for check in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2, sort_keys=True, default=_json_default)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not serializable: {type(value)}")


@dataclass
class VerificationGrid:
    """Uniform (x, c) grid; c starts one cell above zero"""
    nx: int = 400
    nc: int = 200
    x_max: Optional[float] = None
    c_max: Optional[float] = None
    fd_step: float = FD_STEP

    def resolve(self, pv: PiecewiseValue) -> Tuple[np.ndarray, np.ndarray]:
        p = pv.params
        constants = compute_constants(p)
        c_max = self.c_max
        if c_max is None:
            c_max = 2.0 * pv.levels.c_bar if pv.levels is not None and math.isfinite(pv.levels.c_bar) else 1.0
        if not pv.high_cost:
            c_max = min(c_max, pv.c_max - 2.0 * self.fd_step)
        anchor = constants.f0 if constants.f0 is not None else p.x_half_delta
        x_max = self.x_max if self.x_max is not None else max(anchor, p.x_half_lambda) + c_max + 2.0 / p.sqrt2a
        dc = c_max / self.nc
        xs = np.linspace(0.0, x_max, self.nx + 1)[1:]
        cs = np.linspace(dc, c_max, self.nc)
        return xs, cs


def _fd_first(f_m2, f_m1, f_p1, f_p2, h):
    return (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h)


def _fd_second(f_m2, f_m1, f_0, f_p1, f_p2, h):
    return (-f_p2 + 16.0 * f_p1 - 30.0 * f_0 + 16.0 * f_m1 - f_m2) / (12.0 * h * h)


def check_variational(pv: PiecewiseValue, grid: Optional[VerificationGrid] = None) -> VerificationReport:
    """
    Obstacle bound, gradient constraint, supersolution and complementarity on a grid.

    Args:
        pv: Candidate value function
        grid: Grid description (400 x 200 by default)

    Returns:
        VerificationReport with one entry per condition plus the fitted growth constant
    """
    grid = grid or VerificationGrid()
    xs, cs = grid.resolve(pv)
    p = pv.params
    h = min(grid.fd_step, (xs[1] - xs[0]) / 4.0)
    margin_x = 2.0 * (xs[1] - xs[0])
    margin_c = 2.0 * (cs[1] - cs[0]) if len(cs) > 1 else 2.0 * cs[0]

    worst = {'obstacle': (0.0, None), 'gradient': (0.0, None), 'supersolution': (0.0, None),
             'complementarity': (0.0, None)}
    growth: List[Tuple[float, float]] = []
    checked = 0

    def record(name: str, ratio: np.ndarray, mask: np.ndarray, c: float):
        if not np.any(mask):
            return
        k = int(np.argmax(np.where(mask, ratio, -np.inf)))
        if ratio[k] > worst[name][0]:
            worst[name] = (float(ratio[k]), (float(xs[k]), float(c)))

    for c in cs:
        if c - 2.0 * h <= 0:
            continue
        keep = np.array([not pv.near_nonsmooth(x, c, margin_x, margin_c) for x in xs])
        if not np.any(keep):
            continue
        Q = pv.values(xs, c)
        Qx_m2, Qx_m1 = pv.values(xs - 2 * h, c), pv.values(xs - h, c)
        Qx_p1, Qx_p2 = pv.values(xs + h, c), pv.values(xs + h * 2, c)
        Qc_m2, Qc_m1 = pv.values(xs, c - 2 * h), pv.values(xs, c - h)
        Qc_p1, Qc_p2 = pv.values(xs, c + h), pv.values(xs, c + 2 * h)

        Qx = _fd_first(Qx_m2, Qx_m1, Qx_p1, Qx_p2, h)
        Qxx = _fd_second(Qx_m2, Qx_m1, Q, Qx_p1, Qx_p2, h)
        Qc = _fd_first(Qc_m2, Qc_m1, Qc_p1, Qc_p2, h)

        scale = 1.0 + np.abs(Q)
        slack_obstacle = p.delta * xs ** 2 - Q
        slack_gradient = 1.0 - np.abs(Qx) - Qc
        slack_super = 0.5 * Qxx - p.alpha * Q + p.lam * xs ** 2

        record('obstacle', -slack_obstacle / scale, keep, c)
        record('gradient', -slack_gradient / scale, keep, c)
        record('supersolution', -slack_super / scale, keep, c)
        product = np.abs(slack_obstacle * slack_gradient * slack_super) / scale ** 2
        record('complementarity', product, keep, c)

        ratios = np.abs(Qx[keep]) / (1.0 + xs[keep])
        growth.append((float(c), float(np.max(ratios))))
        checked += int(np.sum(keep))

    report = VerificationReport(metadata={'variational_grid': {'nx': len(xs), 'nc': len(cs), 'x_max': float(xs[-1]),
                                                                'c_max': float(cs[-1]), 'fd_step': h,
                                                                'points_checked': checked}})
    for name in ('obstacle', 'gradient', 'supersolution'):
        value, location = worst[name]
        report.add(f'variational/{name}', SLACK_RTOL, value, location, value <= SLACK_RTOL)
    value, location = worst['complementarity']
    report.add('variational/complementarity', SLACK_RTOL, value, location, value <= SLACK_RTOL)

    if len(growth) >= 2:
        c_arr = np.array([g[0] for g in growth])
        k_arr = np.array([g[1] for g in growth])
        slope, intercept = np.polyfit(c_arr, k_arr, 1)
        excess = float(np.max(k_arr - (intercept + slope * c_arr)))
        report.metadata['growth_constant'] = {'intercept': float(intercept + max(excess, 0.0)), 'slope': float(slope)}
        report.add('variational/growth', math.inf, float(np.max(k_arr)), None, bool(np.all(np.isfinite(k_arr))),
                   detail='max |Q_x|/(1+|x|) per fuel row')
    return report


def _one_sided_dx(f, x: float, h: float, side: int) -> float:
    """Three-point one-sided derivative; side = -1 uses points left of x"""
    if side < 0:
        return (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h)
    return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)


def _default_fuel_rows(pv: PiecewiseValue, n: int) -> np.ndarray:
    levels = pv.levels
    top = min(2.0 * levels.c_bar if math.isfinite(levels.c_bar) else pv.c_max, pv.c_max)
    rows = np.linspace(0.02 * top, 0.98 * top, n)
    special = [levels.c_bar, levels.c_I, levels.c_star, levels.c_dagger, levels.c0]
    gap = 0.01 * top
    return np.array([c for c in rows if all(not math.isfinite(s) or abs(c - s) > gap for s in special)])


def check_smooth_fit(pv: PiecewiseValue, c_values: Optional[Sequence[float]] = None) -> VerificationReport:
    """
    Smooth fit across F, F-bar, G-bar and both parts of G.

    Args:
        pv: Candidate value function
        c_values: Fuel rows (20 rows away from critical levels by default)

    Returns:
        VerificationReport
    """
    report = VerificationReport()
    if pv.high_cost:
        hd = pv.params.x_half_delta
        gap = abs(pv.value(hd, 1.0) - 1.0 / (4.0 * pv.params.delta))
        report.add('smooth_fit/high_cost_value_at_boundary', 1e-12, gap, (hd, 1.0), gap <= 1e-12)
        return report

    rows = np.asarray(c_values, dtype=float) if c_values is not None else _default_fuel_rows(pv, 20)
    c_bar = pv.levels.c_bar
    worst = {'SF1': (0.0, None), 'SF2_value': (0.0, None), 'SF2_slope': (0.0, None)}
    repelling_slopes: List[float] = []

    def track(name: str, gap: float, where: Tuple[float, float]):
        if gap > worst[name][0]:
            worst[name] = (gap, where)

    def sf1(left: str, right: str, x: float, c: float):
        h = 1e-6 * (1.0 + x)
        value_l = pv.piece_value(left, x, c)
        value_r = pv.piece_value(right, x, c)
        dl = _one_sided_dx(lambda v: pv.piece_value(left, v, c), x, h, -1)
        dr = _one_sided_dx(lambda v: pv.piece_value(right, v, c), x, h, +1)
        gap = max(abs(value_l - value_r) / (1.0 + abs(value_l)), abs(dl - dr) / (1.0 + abs(dl)))
        track('SF1', gap, (x, c))

    def sf2(region: str, x: float, c: float):
        U = pv.piece_U(region, x, c)
        track('SF2_value', abs(U - 1.0), (x, c))
        track('SF2_slope', abs(pv.marginal_U_dx(region, x, c)) / (1.0 + abs(U)), (x, c))

    for c in rows:
        c = float(c)
        sl = pv.slice(c)
        sf1('I', 'II', sl.F, c)
        beyond = pv.classify_region(sl.G + 1e-5 * (1.0 + sl.G), c).region
        if c < c_bar:
            if beyond.startswith('IV'):
                sf1('II', beyond, sl.G, c)
            repelling_slopes.append(pv.marginal_U_dx('II', sl.G, c))
        else:
            sf2('II', sl.G, c)
        if sl.communicating:
            below = pv.classify_region(sl.Fbar - 1e-5 * (1.0 + sl.Fbar), c).region
            if below.startswith('IV'):
                sf1(below, 'III', sl.Fbar, c)
            sf2('III', sl.Gbar, c)

    report.metadata['smooth_fit_rows'] = len(rows)
    for name, (gap, where) in worst.items():
        report.add(f'smooth_fit/{name}', SMOOTH_FIT_RTOL, gap, where, gap <= SMOOTH_FIT_RTOL)
    if repelling_slopes:
        low = min(repelling_slopes)
        report.add('smooth_fit/U_x_positive_at_repelling_G', 0.0, low, None, low > 0.0)
    return report


def check_containment(pv: PiecewiseValue, c_values: Optional[Sequence[float]] = None,
                      margin: float = 1e-2, points: int = 25) -> VerificationReport:
    """
    One-shot waiting intervals at small fuel lie in regions II or III.

    Points near a boundary are skipped: each boundary excludes the band between
    its position at c and its c -> 0 limit, widened by the margin.

    Args:
        pv: Candidate value function
        c_values: Small fuel levels (geometric from C_START to min(c_I, c0)/2 by default)
        margin: Distance kept from the boundaries and their c -> 0 limits
        points: Samples per interval

    Returns:
        VerificationReport
    """
    report = VerificationReport()
    levels = pv.levels
    solution_curves = pv.solution
    top = min(levels.c_I, levels.c0) / 2.0
    if c_values is not None:
        rows = np.asarray(c_values, dtype=float)
    else:
        rows = np.geomspace(min(C_START, top), top, 8)
    limits = [solution_curves.F.limit_at_zero(), solution_curves.G.limit_at_zero()]
    if solution_curves.branch is not None:
        limits += [solution_curves.branch.Fbar(0.0), solution_curves.branch.Gbar(0.0)]
    limits = np.asarray(limits)
    scale = ScaleMap(pv.params.alpha)
    outside = 0
    checked = 0
    first_bad = None
    for c in rows:
        sl = pv.slice(float(c))
        current = np.array([sl.F, sl.G] + ([sl.Fbar, sl.Gbar] if len(limits) == 4 else []), dtype=float)
        if np.any(~np.isfinite(current)):
            continue
        band_lo = np.minimum(current, limits) - margin
        band_hi = np.maximum(current, limits) + margin
        checked += 1
        solution = solve_one_shot(float(c), pv.params)
        for piece in solution.linear_pieces:
            lo = float(scale.psi_inv(piece.y_lo))
            hi = float(scale.psi_inv(piece.y_hi))
            for x in np.linspace(lo, hi, points)[1:-1]:
                if np.any((x >= band_lo) & (x <= band_hi)):
                    continue
                if pv.classify_region(float(x), float(c)).region not in ('II', 'III'):
                    outside += 1
                    first_bad = first_bad or (float(x), float(c))
    report.add('structure/one_shot_containment', 0.0, outside, first_bad, outside == 0 and checked > 0,
               detail='points of the one-shot waiting set outside II and III')
    report.metadata['containment_rows'] = checked
    return report


def check_structure(pv: PiecewiseValue) -> VerificationReport:
    """
    Monotonicity, limits and ordering hypotheses on the boundaries and fuel levels.

    Args:
        pv: Candidate value function

    Returns:
        VerificationReport
    """
    report = VerificationReport()
    p = pv.params
    if pv.high_cost:
        hd = p.x_half_delta
        left = pv.classify_region(hd * (1.0 - 1e-9), 1.0).region
        right = pv.classify_region(hd * (1.0 + 1e-9), 1.0).region
        report.add('structure/vertical_boundary', 0.0, 0.0, (hd, 1.0), left == 'I' and right == 'IVc',
                   detail='stop left of 1/(2 delta), act right of it')
        return report

    solution = pv.solution
    levels = pv.levels
    sf = solution.continuation.sf
    hd, a = p.x_half_delta, sf.a
    F, G = solution.F, solution.G
    c_bar = levels.c_bar

    below = F.c < min(levels.c0, c_bar)
    worst_dF = float(np.max(F.slopes[below])) if np.any(below) else -math.inf
    report.add('structure/F_decreasing', 0.0, worst_dF, None, worst_dF < 0.0)
    small = G.c < c_bar
    worst_dG = float(np.min(G.slopes[small])) if np.any(small) else math.inf
    report.add('structure/G_slope_above_one', 1.0, worst_dG, None, worst_dG > 1.0)

    small_q = [s.q for s in solution_samples(pv) if s.c < c_bar]
    low_q = min(small_q) if small_q else math.inf
    report.add('structure/q_positive_below_c_bar', 0.0, low_q, None, low_q > 0.0)

    if solution.large is not None:
        large_idx = G.c > c_bar
        slopes = G.slopes[large_idx]
        report.add('structure/reflecting_G_slope_in_0_1', 0.0, float(np.max(np.abs(slopes - 0.5))), None,
                   bool(np.all((slopes > 0.0) & (slopes < 1.0))))
        bound_ok = bool(np.all(F.x[large_idx] < hd) and np.all(G.x[large_idx] > a)
                        and np.all(G.x[large_idx] < a + 1.0 / sf.s) and np.all(F.x[large_idx] > 0.0))
        report.add('structure/large_fuel_bounds', 0.0, float(np.min(G.x[large_idx]) - a), None, bound_ok,
                   detail='F < 1/(2 delta) < alpha/(2 lambda) < G < alpha/(2 lambda) + 1/sqrt(2 alpha)')
        q_gap = abs(sf.q(G(c_bar), F(c_bar)))
        report.add('structure/q_zero_at_c_bar', 1e-9, q_gap, None, q_gap <= 1e-9)

    F0, G0 = F.limit_at_zero(), G.limit_at_zero()
    report.add('structure/F_limit_at_zero', LIMIT_TOL, abs(F0 - hd), (F0, 0.0), abs(F0 - hd) <= LIMIT_TOL)
    report.add('structure/G_limit_at_zero', LIMIT_TOL, abs(G0 - hd), (G0, 0.0), abs(G0 - hd) <= LIMIT_TOL)

    identity_gap = 0.0
    for s in solution_samples(pv):
        if s.mode != 'right1' or s.c >= c_bar:
            continue
        L_x = sf.L_x(s.G, s.c)
        identity_gap = max(identity_gap, abs(s.dG - (1.0 - s.q / L_x)) / (1.0 + abs(s.dG)))
    report.add('structure/G_slope_identity', 1e-4, identity_gap, None, identity_gap <= 1e-4)

    branch = solution.branch
    if branch is not None:
        grid = solution.Fbar.c[1:-1]
        dF = np.array([branch.dFbar(c) for c in grid])
        dG = np.array([branch.dGbar(c) for c in grid])
        report.add('structure/Fbar_slope_in_0_1', 0.0, float(np.max(np.abs(dF - 0.5))), None,
                   bool(np.all((dF > 0.0) & (dF < 1.0))))
        report.add('structure/Gbar_decreasing', 0.0, float(np.max(dG)), None, bool(np.all(dG < 0.0)))
        end_gap = max(abs(branch.Fbar(branch.c_I) - a), abs(branch.Gbar(branch.c_I) - a))
        report.add('structure/Fbar_Gbar_meet_at_c_I', 1e-6, end_gap, (a, branch.c_I), end_gap <= 1e-6)
        start_gap = max(abs(branch.Fbar(0.0) - branch.f0), abs(branch.Gbar(0.0) - branch.g0))
        report.add('structure/Fbar_Gbar_start', 1e-8, start_gap, None, start_gap <= 1e-8)
        gaps = [branch.Fbar(s.c) - s.G for s in solution_samples(pv) if s.c <= branch.c_I]
        low = min(gaps) if gaps else math.inf
        report.add('structure/G_below_Fbar', 0.0, low, None, low > 0.0)

    for name, ok in levels.ordering_checks(pv.regime, compute_constants(p).k_bar).items():
        report.add(f'structure/order/{name}', 0.0, 0.0, None, ok)
    return report


def solution_samples(pv: PiecewiseValue):
    """Exact tangency samples below c_bar"""
    return pv.solution.samples


def run_battery(pv: PiecewiseValue, grid: Optional[VerificationGrid] = None) -> VerificationReport:
    """
    Run every check and merge the reports.

    Args:
        pv: Candidate value function
        grid: Grid for the variational checks

    Returns:
        Merged VerificationReport
    """
    report = VerificationReport(metadata={'params': pv.params.to_dict(), 'regime': pv.regime.value})
    steps = [('structure', lambda: check_structure(pv)),
             ('smooth_fit', lambda: check_smooth_fit(pv)),
             ('variational', lambda: check_variational(pv, grid))]
    if pv.regime in (Regime.V_SHAPE, Regime.V_LAMBDA_SHAPE):
        steps.insert(1, ('containment', lambda: check_containment(pv)))
    for name, step in steps:
        try:
            report.merge(step())
        except FuelControlError as e:
            report.add(f'{name}/error', 0.0, math.inf, None, False, detail=str(e))
            logger.error(f"❌ {name} checks aborted: {str(e)}")
    return report
