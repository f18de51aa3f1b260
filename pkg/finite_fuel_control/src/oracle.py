#!/usr/bin/env python3
"""
Grid dynamic-programming oracle for the finite-fuel problem.

The controlled diffusion is replaced by a symmetric random walk on a uniform
x-grid with time step dx^2, and acting moves one cell down in x and in fuel at
cost dx. Because acting only lowers the fuel, the fuel rows are solved bottom
up, each row being a one-dimensional obstacle problem solved by projected SOR
with red-black ordering.
"""

import os
import sys
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import ProblemParams, ParameterError, ConvergenceError, DomainError, compute_constants
from transform import NoFuelCost

logger = setup_solver_logging('oracle')

STOP, WAIT, ACT = 0, 1, 2
POLICY_NAMES = {STOP: 'stop', WAIT: 'wait', ACT: 'act'}
MAX_SWITCHES = 4


@dataclass
class GridConfig:
    """Grid description; x_max and c_max are filled in by resolve() when omitted"""
    dx: float = 0.01
    x_max: Optional[float] = None
    c_max: Optional[float] = None
    tol: float = 1e-10
    max_iter: int = 200000
    jacobi: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GridConfig':
        known = {k: data[k] for k in ('dx', 'x_max', 'c_max', 'tol', 'max_iter', 'jacobi') if k in data}
        return cls(**known)

    def resolve(self, p: ProblemParams) -> 'GridConfig':
        """
        Fill in the grid extent and validate the step.

        Args:
            p: Problem parameters

        Returns:
            New GridConfig with concrete x_max and c_max
        """
        if not (0 < self.dx <= 0.02):
            raise ParameterError(f"dx must lie in (0, 0.02], got {self.dx}")
        constants = compute_constants(p)
        c_max = self.c_max
        if c_max is None:
            c_max = 1.0 if constants.k is None else max(constants.k, constants.k_bar, 0.1)
        anchor = constants.f0 if constants.f0 is not None else p.x_half_delta
        floor = max(anchor, p.x_half_lambda) + c_max + 5.0 / p.sqrt2a
        x_max = floor if self.x_max is None else self.x_max
        if x_max < floor - 1e-12:
            raise ParameterError(f"x_max={x_max} is below the required extent {floor}")
        return GridConfig(dx=self.dx, x_max=x_max, c_max=c_max, tol=self.tol,
                          max_iter=self.max_iter, jacobi=self.jacobi)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class GridSolution:
    params: ProblemParams
    config: GridConfig
    x: np.ndarray
    c: np.ndarray
    value: np.ndarray
    policy: np.ndarray
    iterations: List[int] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)

    def row_index(self, c: float) -> int:
        k = int(round(c / self.config.dx))
        if not (0 <= k < len(self.c)):
            raise DomainError(f"fuel level {c} outside the grid")
        return k

    def wait_components(self, c: float) -> int:
        """Number of maximal runs of waiting nodes in the row nearest to c"""
        row = self.policy[self.row_index(c)] == WAIT
        starts = row[1:] & ~row[:-1]
        return int(np.sum(starts)) + int(row[0])

    def to_frame(self) -> pd.DataFrame:
        """Long table x, c, value, policy"""
        xx, cc = np.meshgrid(self.x, self.c)
        return pd.DataFrame({'x': xx.ravel(), 'c': cc.ravel(), 'value': self.value.ravel(),
                             'policy': [POLICY_NAMES[int(k)] for k in self.policy.ravel()]})


def _over_relaxation(n: int, alpha: float, dt: float) -> float:
    # Jacobi spectral radius with a reflecting end at 0 and a fixed end at x_max
    mu = math.cos(math.pi / (2.0 * n)) / (1.0 + alpha * dt)
    return 2.0 / (1.0 + math.sqrt(1.0 - mu * mu))


def _solve_row(psi: np.ndarray, x: np.ndarray, p: ProblemParams, dt: float,
               start: np.ndarray, tol: float, max_iter: int, jacobi: bool) -> Tuple[np.ndarray, int, float]:
    """
    Projected SOR for V = min(psi, wait(V)) with V[-1] held fixed.

    Args:
        psi: Obstacle (stop or act, whichever is cheaper)
        x: Grid nodes
        p: Problem parameters
        dt: Time step of the chain
        start: Initial iterate, its last entry is the boundary value
        tol: Sup-norm update threshold
        max_iter: Sweep cap
        jacobi: Use plain projected Jacobi sweeps

    Returns:
        (values, sweeps, final residual)
    """
    n = len(x) - 1
    V = np.minimum(start.copy(), psi)
    V[n] = start[n]
    denom = 1.0 + p.alpha * dt
    source = p.lam * x * x * dt / denom
    half = 0.5 / denom
    interior = np.arange(n)
    left_of = np.where(interior == 0, 1, interior - 1)

    if jacobi:
        omega = 1.0
        groups = [(interior, left_of)]
    else:
        omega = _over_relaxation(n, p.alpha, dt)
        even, odd = interior[0::2], interior[1::2]
        groups = [(even, left_of[0::2]), (odd, left_of[1::2])]

    for sweep in range(1, max_iter + 1):
        change = 0.0
        if jacobi:
            g = source[interior] + half * (V[left_of] + V[interior + 1])
            new = np.minimum(psi[interior], g)
            change = float(np.max(np.abs(new - V[interior])))
            V[interior] = new
        else:
            for idx, left in groups:
                g = source[idx] + half * (V[left] + V[idx + 1])
                new = np.minimum(psi[idx], V[idx] + omega * (g - V[idx]))
                change = max(change, float(np.max(np.abs(new - V[idx]))))
                V[idx] = new
        if change < tol:
            g = source[interior] + half * (V[left_of] + V[interior + 1])
            residual = float(np.max(np.abs(V[interior] - np.minimum(psi[interior], g))))
            return V, sweep, residual

    g = source[interior] + half * (V[left_of] + V[interior + 1])
    residual = float(np.max(np.abs(V[interior] - np.minimum(psi[interior], g))))
    raise ConvergenceError(f"row solve did not converge in {max_iter} sweeps (residual {residual})")


def _classify_row(V: np.ndarray, stop: np.ndarray, act: np.ndarray, tol: float) -> np.ndarray:
    eps = max(100.0 * tol, 1e-12)
    policy = np.full(len(V), WAIT, dtype=np.int8)
    policy[act - V <= eps * (1.0 + np.abs(V))] = ACT
    policy[stop - V <= eps * (1.0 + np.abs(V))] = STOP
    return policy


def solve_dp(p: ProblemParams, grid_config: Optional[GridConfig] = None) -> GridSolution:
    """
    Solve the discretized control problem row by row in fuel.

    Args:
        p: Problem parameters
        grid_config: Grid description (defaults resolved from the regime constants)

    Returns:
        GridSolution with values and stop/wait/act policy on every node
    """
    cfg = (grid_config or GridConfig()).resolve(p)
    dx = cfg.dx
    n_x = int(math.ceil(cfg.x_max / dx))
    n_c = int(round(cfg.c_max / dx))
    x = dx * np.arange(n_x + 1)
    c = dx * np.arange(n_c + 1)
    dt = dx * dx
    stop = p.delta * x * x
    no_fuel = NoFuelCost(p)

    logger.info(f"Grid DP: dx={dx}, {n_x + 1} x-nodes, {n_c + 1} fuel rows, x_max={x[-1]}")
    value = np.empty((n_c + 1, n_x + 1))
    policy = np.empty((n_c + 1, n_x + 1), dtype=np.int8)
    iterations: List[int] = []
    residuals: List[float] = []

    previous = None
    for j in range(n_c + 1):
        if previous is None:
            act = np.full(n_x + 1, np.inf)
            boundary = float(no_fuel.value(x[-1]))
        else:
            act = np.empty(n_x + 1)
            act[1:] = previous[:-1] + dx
            act[0] = previous[1] + dx
            boundary = min(stop[-1], float(no_fuel.value(x[-1] - c[j])) + c[j])
        psi = np.minimum(stop, act)
        start = psi.copy() if previous is None else previous.copy()
        start[-1] = boundary
        row, sweeps, residual = _solve_row(psi, x, p, dt, start, cfg.tol, cfg.max_iter, cfg.jacobi)
        value[j] = row
        policy[j] = _classify_row(row, stop, act, cfg.tol)
        policy[j, -1] = STOP if stop[-1] <= boundary else ACT
        iterations.append(sweeps)
        residuals.append(residual)
        previous = row
        if j % max(1, n_c // 5) == 0:
            logger.info(f"Row c={c[j]}: {sweeps} sweeps, residual {residual}")

    return GridSolution(p, cfg, x, c, value, policy, iterations, residuals)


@dataclass
class StoppingSolution:
    x: np.ndarray
    value: np.ndarray
    stop_region: np.ndarray
    sweeps: int
    residual: float

    def stop_edge(self) -> float:
        """Right end of the stopping interval containing the origin"""
        k = 0
        while k + 1 < len(self.x) and self.stop_region[k + 1]:
            k += 1
        return float(self.x[k])


def solve_stopping_dp(p: ProblemParams, obstacle: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                      dx: float = 1e-3, x_max: Optional[float] = None,
                      tol: float = 1e-10, max_iter: int = 500000) -> StoppingSolution:
    """
    Pure optimal stopping of the running-cost diffusion on a grid.

    Args:
        p: Problem parameters
        obstacle: Stopping cost (delta x^2 by default)
        dx: Grid step
        x_max: Right end (f0-based default)
        tol: Sup-norm update threshold
        max_iter: Sweep cap

    Returns:
        StoppingSolution
    """
    default_obstacle = obstacle is None
    obstacle = obstacle or (lambda x: p.delta * x * x)
    if x_max is None:
        constants = compute_constants(p)
        anchor = constants.f0 if constants.f0 is not None else p.x_half_delta
        x_max = max(anchor, p.x_half_lambda) + 5.0 / p.sqrt2a
    n_x = int(math.ceil(x_max / dx))
    x = dx * np.arange(n_x + 1)
    psi = np.asarray(obstacle(x), dtype=float)
    start = psi.copy()
    if default_obstacle and p.lam < p.ad:
        start[-1] = min(psi[-1], float(NoFuelCost(p).value(x[-1])))
    V, sweeps, residual = _solve_row(psi, x, p, dx * dx, start, tol, max_iter, jacobi=False)
    eps = max(100.0 * tol, 1e-12)
    return StoppingSolution(x, V, psi - V <= eps * (1.0 + np.abs(V)), sweeps, residual)


# boundary extraction -------------------------------------------------------------------

@dataclass
class Switch:
    x: float
    before: str
    after: str
    label: str


@dataclass
class RowBoundaries:
    c: float
    switches: List[Switch]
    ambiguous: bool
    uncertainty: float

    def points(self) -> Dict[str, float]:
        return {s.label: s.x for s in self.switches}


def _label_switches(raw: List[Tuple[float, int, int]]) -> List[Switch]:
    labelled = []
    waits_closed = 0
    for x, before, after in raw:
        if before == STOP and after == WAIT:
            label = 'F'
        elif before == STOP and after == ACT:
            label = 'F=G'
        elif before == WAIT and after == ACT:
            label = 'G' if waits_closed == 0 else 'Gbar'
            waits_closed += 1
        elif before == ACT and after == WAIT:
            label = 'Fbar'
        else:
            label = f'{POLICY_NAMES[before]}->{POLICY_NAMES[after]}'
        labelled.append(Switch(x, POLICY_NAMES[before], POLICY_NAMES[after], label))
    return labelled


def extract_boundaries(sol: GridSolution) -> List[RowBoundaries]:
    """
    Policy switch locations in every fuel row.

    Args:
        sol: Converged grid solution

    Returns:
        One RowBoundaries per row; switches sit half way between nodes
    """
    rows = []
    half = sol.config.dx / 2.0
    for j, c in enumerate(sol.c):
        policy = sol.policy[j, :-1]
        change = np.flatnonzero(policy[1:] != policy[:-1])
        raw = [(float(sol.x[k] + half), int(policy[k]), int(policy[k + 1])) for k in change]
        ambiguous = len(raw) > MAX_SWITCHES
        if ambiguous:
            logger.warning(f"Row c={c} has {len(raw)} policy switches")
        rows.append(RowBoundaries(float(c), _label_switches(raw), ambiguous, half))
    return rows


# comparison with the candidate --------------------------------------------------------------

@dataclass
class OracleComparison:
    dx: float
    sup_gap: float
    location: Tuple[float, float]
    relative_gap: float
    min_signed_gap: float
    fitted_C: float
    boundary_gaps: Dict[str, float]
    rows_compared: int

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


def _analytic_point(pv, label: str, c: float) -> Optional[float]:
    if pv.high_cost:
        return pv.params.x_half_delta if label in ('F=G', 'F', 'G') else None
    sl = pv.slice(c)
    return {'F': sl.F, 'G': sl.G, 'Fbar': sl.Fbar, 'Gbar': sl.Gbar}.get(label)


def compare_with_candidate(sol: GridSolution, pv, boundaries: Optional[List[RowBoundaries]] = None) -> OracleComparison:
    """
    Sup-norm and boundary gaps between the grid solution and the candidate.

    Args:
        sol: Grid solution
        pv: PiecewiseValue candidate
        boundaries: Extracted switches (computed when omitted)

    Returns:
        OracleComparison
    """
    c_top = math.inf if pv.high_cost else pv.c_max
    sup_gap, where, scale, signed = 0.0, (0.0, 0.0), 0.0, math.inf
    compared = 0
    for j, c in enumerate(sol.c):
        if c > c_top:
            break
        exact = pv.values(sol.x, float(c))
        gap = sol.value[j] - exact
        k = int(np.argmax(np.abs(gap)))
        if abs(gap[k]) > sup_gap:
            sup_gap, where = float(abs(gap[k])), (float(sol.x[k]), float(c))
        scale = max(scale, float(np.max(np.abs(exact))))
        signed = min(signed, float(np.min(gap)))
        compared += 1

    gaps: Dict[str, float] = {}
    rows = boundaries if boundaries is not None else extract_boundaries(sol)
    for row in rows:
        if row.c <= 0 or row.c > c_top or row.ambiguous:
            continue
        for switch in row.switches:
            target = _analytic_point(pv, switch.label, row.c)
            if target is None:
                continue
            gaps[switch.label] = max(gaps.get(switch.label, 0.0), abs(switch.x - target))

    result = OracleComparison(dx=sol.config.dx, sup_gap=sup_gap, location=where,
                              relative_gap=sup_gap / scale if scale > 0 else math.inf,
                              min_signed_gap=signed, fitted_C=sup_gap / sol.config.dx,
                              boundary_gaps=gaps, rows_compared=compared)
    logger.info(f"Oracle gap at dx={sol.config.dx}: sup {sup_gap} at {where}, relative {result.relative_gap}")
    return result


def refinement_study(p: ProblemParams, pv, dxs: Sequence[float] = (0.02, 0.01, 0.005),
                     base: Optional[GridConfig] = None) -> Tuple[pd.DataFrame, bool]:
    """
    Grid refinement against the candidate.

    Args:
        p: Problem parameters
        pv: PiecewiseValue candidate
        dxs: Grid steps, coarsest first
        base: Template for the remaining grid settings

    Returns:
        (table with dx, sup_gap, relative_gap, fitted_C; True when the gap shrinks monotonically)
    """
    base = base or GridConfig()
    rows = []
    for dx in dxs:
        cfg = GridConfig(dx=dx, x_max=base.x_max, c_max=base.c_max, tol=base.tol,
                         max_iter=base.max_iter, jacobi=base.jacobi)
        comparison = compare_with_candidate(solve_dp(p, cfg), pv)
        rows.append({'dx': dx, 'sup_gap': comparison.sup_gap, 'relative_gap': comparison.relative_gap,
                     'fitted_C': comparison.fitted_C})
    table = pd.DataFrame(rows, columns=['dx', 'sup_gap', 'relative_gap', 'fitted_C'])
    monotone = bool(np.all(np.diff(table['sup_gap'].to_numpy()) < 0))
    return table, monotone
