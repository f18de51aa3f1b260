#!/usr/bin/env python3
"""
Monte Carlo simulation of the controlled state under the candidate strategy.

Paths are advanced in blocks with an Euler scheme, each block drawing from its
own Philox stream keyed by (seed, block). Paths stop in region I, diffuse
in the waiting regions, and in region IV spend the displacement zeta(x, c)
along the direction (-1, -1). An Euler step that overshoots a reflecting
boundary is projected back onto it the same way, so reflection and the
repelling jumps share one code path.
"""

import os
import sys
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import ParameterError, DomainError
from solver_config import SolverSettings
from valuefn import PiecewiseValue

logger = setup_solver_logging('simulate')

TRUNCATION_LEVEL = 1e-6
BLOCK_SIZE = 2000
NEWTON_STEPS = 12
LANDING_EPS = 1e-12

# region codes kept per path between steps
ZERO_FUEL, FIRST_WAIT, SECOND_WAIT = 0, 1, 2


@dataclass
class SimConfig:
    dt: float = 1e-4
    horizon: Optional[float] = None
    paths: int = 10000
    seed: int = 20240601
    block_size: int = BLOCK_SIZE
    threads: Optional[int] = None
    mirrored: bool = False
    record_events: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.paths < 2:
            raise ParameterError("at least two paths are needed for a standard error")
        if self.block_size < 1:
            raise ParameterError("block_size must be positive")
        if self.horizon is not None and self.horizon <= 0:
            raise ParameterError("horizon must be positive")

    @classmethod
    def from_settings(cls, settings: SolverSettings, **overrides) -> 'SimConfig':
        values = dict(dt=settings.dt, paths=settings.paths, seed=settings.seed, threads=settings.threads)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def horizon_for(self, alpha: float) -> float:
        """Horizon with exp(-alpha T) below the truncation level unless set explicitly"""
        if self.horizon is not None:
            return self.horizon
        return math.log(1.0 / TRUNCATION_LEVEL) / alpha


@dataclass
class PathEvent:
    kind: str
    path: int
    t: float
    x: float
    c: float
    size: float = 0.0

    def to_record(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'path': self.path, 't': self.t, 'x': self.x, 'c': self.c, 'size': self.size}


@dataclass
class PathSample:
    cost: float
    x_terminal: float
    c_terminal: float
    spent: float
    stop_time: Optional[float]
    truncated: bool
    events: List[PathEvent] = field(default_factory=list)
    spent_trace: List[Tuple[float, float]] = field(default_factory=list)


class StrategyView:
    """
    Vectorized access to the candidate's boundaries and displacement.

    Args:
        pv: Candidate value function
    """

    def __init__(self, pv: PiecewiseValue):
        self.pv = pv
        self.params = pv.params
        self.high_cost = pv.high_cost
        p = self.params
        self.hd = p.x_half_delta
        self.f0 = math.inf if self.high_cost else pv.no_fuel.f0
        solution = pv.solution
        self.F, self.G = solution.F, solution.G
        self.Fbar, self.Gbar = solution.Fbar, solution.Gbar
        self.branch = solution.branch
        self.large = solution.large
        self.c_top = math.inf if self.high_cost else pv.c_max
        self.c_bar = self.large.c_bar if self.large is not None else math.inf
        self.c_I = self.branch.c_I if self.branch is not None else -math.inf
        if self.large is not None:
            self.reflect_top = self.large.G(self.c_bar) - self.c_bar
        if self.branch is not None:
            self.b_lo = self.branch.sf.a - self.c_I
            self.b_hi = self.branch.g0

    def bounds(self, C: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(F, G, F-bar, G-bar) per path; NaN marks a missing second component"""
        n = len(C)
        Fb = np.full(n, np.nan)
        Gb = np.full(n, np.nan)
        empty = C <= 0.0
        if self.high_cost:
            F = np.where(empty, np.inf, self.hd)
            return F, F.copy(), Fb, Gb
        F = np.where(empty, self.f0, self.F.evaluate(C))
        G = np.where(empty, np.inf, self.G.evaluate(C))
        if self.branch is not None:
            second = (~empty) & (C < self.c_I)
            if np.any(second):
                Fb[second] = self.Fbar.evaluate(C[second])
                Gb[second] = self.Gbar.evaluate(C[second])
        return F, G, Fb, Gb

    @staticmethod
    def _land(curve, shift: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Root of curve(theta) - theta = shift on [lo, hi]; the left side is decreasing"""
        theta = hi.copy()
        lo, hi = lo.copy(), hi.copy()
        for _ in range(NEWTON_STEPS):
            g = curve.evaluate(theta) - theta - shift
            above = g > 0
            lo = np.where(above, theta, lo)
            hi = np.where(above, hi, theta)
            slope = curve.evaluate_slope(theta) - 1.0
            with np.errstate(divide='ignore', invalid='ignore'):
                step = theta - g / slope
            inside = np.isfinite(step) & (step > lo) & (step < hi)
            theta = np.where(inside, step, 0.5 * (lo + hi))
        return theta

    def displacement(self, y: np.ndarray, C: np.ndarray, Gb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Fuel spent from states in region IV.

        Args:
            y: Distances from the origin
            C: Fuel levels
            Gb: G-bar at C (NaN when absent)

        Returns:
            (zeta, landing code) with code 1 on reflecting G, 2 on G-bar, 3 on the HighCost
            vertical boundary, 0 when the fuel runs out
        """
        if self.high_cost:
            zeta = np.minimum(C, y - self.hd)
            return zeta, np.where(zeta < C, 3, 0).astype(np.int8)
        zeta = C.copy()
        code = np.zeros(len(y), dtype=np.int8)
        shift = y - C
        pending = np.ones(len(y), dtype=bool)
        if self.large is not None:
            on_g = (C > self.c_bar) & (shift <= self.reflect_top)
            if np.any(on_g):
                hi = np.minimum(C[on_g], self.G.c_max)
                theta = self._land(self.G, shift[on_g], np.full(hi.shape, self.c_bar), hi)
                zeta[on_g] = C[on_g] - theta
                code[on_g] = 1
                pending &= ~on_g
        if self.branch is not None:
            outside = np.isnan(Gb) | (y > np.nan_to_num(Gb, nan=-np.inf))
            on_gbar = pending & (shift >= self.b_lo) & (shift <= self.b_hi) & outside
            if np.any(on_gbar):
                hi = np.minimum(C[on_gbar], self.c_I)
                theta = self._land(self.Gbar, shift[on_gbar], np.zeros(hi.shape), hi)
                zeta[on_gbar] = C[on_gbar] - theta
                code[on_gbar] = 2
        return np.clip(zeta, 0.0, C), code


@dataclass
class BlockResult:
    cost: np.ndarray
    x_terminal: np.ndarray
    c_terminal: np.ndarray
    spent: np.ndarray
    stop_time: np.ndarray
    truncated: np.ndarray
    bias: np.ndarray
    events: List[PathEvent]


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _run_block(x0: float, c0: float, view: StrategyView, cfg: SimConfig,
               block: int, n: int, first_path: int) -> BlockResult:
    """Advance n paths started at (x0, c0) until they stop or reach the horizon"""
    p = view.params
    rng = _block_rng(cfg.seed, block)
    dt = cfg.dt
    sqrt_dt = math.sqrt(dt)
    horizon = cfg.horizon_for(p.alpha)
    n_steps = int(math.ceil(horizon / dt))

    x = np.full(n, float(x0))
    C = np.full(n, float(c0))
    cost = np.zeros(n)
    spent = np.zeros(n)
    stop_time = np.full(n, np.nan)
    alive = np.ones(n, dtype=bool)
    region = np.full(n, FIRST_WAIT, dtype=np.int8)
    F, G, Fb, Gb = view.bounds(C)
    events: List[PathEvent] = []

    def control(idx: np.ndarray, t: float, disc: float, initial: bool):
        y = np.abs(x[idx])
        Ci = C[idx]
        second = ~np.isnan(Fb[idx]) & (y >= np.nan_to_num(Fb[idx], nan=np.inf)) & (y <= np.nan_to_num(Gb[idx], nan=-np.inf))
        act = (Ci > 0.0) & (y > G[idx] + LANDING_EPS) & ~second
        if not np.any(act):
            return
        sel = idx[act]
        ya, Ca = y[act], Ci[act]
        zeta, code = view.displacement(ya, Ca, Gb[sel])
        sign = np.where(x[sel] < 0, -1.0, 1.0)
        if cfg.record_events:
            before = region[sel]
            for k, path in enumerate(sel):
                reflect = (not initial) and ((code[k] == 1 and before[k] == FIRST_WAIT)
                                             or (code[k] == 2 and before[k] == SECOND_WAIT))
                events.append(PathEvent('reflect' if reflect else 'jump', first_path + int(path), t,
                                        float(x[path]), float(C[path]), float(zeta[k])))
        x[sel] = sign * (ya - zeta)
        exhausted = (code == 0) | (zeta >= Ca)
        C[sel] = np.where(exhausted, 0.0, Ca - zeta)
        spent[sel] += zeta
        cost[sel] += disc * zeta
        F[sel], G[sel], Fb[sel], Gb[sel] = view.bounds(C[sel])

    def stop(idx: np.ndarray, t: float, disc: float):
        y = np.abs(x[idx])
        done = y <= F[idx] + LANDING_EPS
        if not np.any(done):
            return
        sel = idx[done]
        cost[sel] += disc * p.delta * x[sel] ** 2
        stop_time[sel] = t
        alive[sel] = False
        if cfg.record_events:
            for path in sel:
                events.append(PathEvent('stop', first_path + int(path), t, float(x[path]), float(C[path])))

    def tag(idx: np.ndarray):
        y = np.abs(x[idx])
        in_second = ~np.isnan(Fb[idx]) & (y >= np.nan_to_num(Fb[idx], nan=np.inf))
        region[idx] = np.where(C[idx] <= 0.0, ZERO_FUEL, np.where(in_second, SECOND_WAIT, FIRST_WAIT))

    everyone = np.arange(n)
    control(everyone, 0.0, 1.0, initial=True)
    stop(everyone, 0.0, 1.0)
    tag(everyone)

    t, disc = 0.0, 1.0
    for step in range(1, n_steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        z = rng.standard_normal(n)
        if cfg.mirrored:
            z = -z
        cost[idx] += disc * p.lam * x[idx] ** 2 * dt
        x[idx] += sqrt_dt * z[idx]
        t = step * dt
        disc = math.exp(-p.alpha * t)
        control(idx, t, disc, initial=False)
        stop(idx, t, disc)
        tag(idx[alive[idx]])

    truncated = alive.copy()
    bias = np.zeros(n)
    if np.any(truncated):
        # stopping at the horizon is admissible; its discounted cost bounds the neglected tail
        tail = disc * p.delta * x[truncated] ** 2
        cost[truncated] += tail
        bias[truncated] = tail
        stop_time[truncated] = t
        if cfg.record_events:
            for path in np.flatnonzero(truncated):
                events.append(PathEvent('truncate', first_path + int(path), t, float(x[path]), float(C[path]),
                                        float(bias[path])))
        logger.warning(f"Block {block}: {int(np.sum(truncated))} paths reached the horizon T={t}")

    return BlockResult(cost, x, C, spent, stop_time, truncated, bias, events)


def _check_start(x: float, c: float, view: StrategyView):
    if c < 0:
        raise DomainError("fuel level must be nonnegative")
    if c > view.c_top:
        raise DomainError(f"fuel level {c} beyond the solved range {view.c_top}")


def simulate_path(x: float, c: float, pv: PiecewiseValue, cfg: SimConfig, path_index: int = 0) -> PathSample:
    """
    One path of the candidate strategy.

    Args:
        x: Start state
        c: Start fuel
        pv: Candidate value function
        cfg: Simulation settings
        path_index: Index of the path within an mc_estimate run with the same settings

    Returns:
        PathSample with its event log; it replays path path_index of mc_estimate
    """
    view = StrategyView(pv)
    _check_start(x, c, view)
    if path_index < 0:
        raise ParameterError("path_index must be nonnegative")
    # streams are keyed per block, so the whole block is replayed
    block, row = divmod(path_index, cfg.block_size)
    first = block * cfg.block_size
    size = min(cfg.block_size, cfg.paths - first) if path_index < cfg.paths else cfg.block_size
    replay = replace(cfg, record_events=True)
    result = _run_block(x, c, view, replay, block, size, first)
    events = [e for e in result.events if e.path == path_index]
    stop_time = result.stop_time[row]
    trace = [(e.t, e.size) for e in events if e.kind in ('jump', 'reflect')]
    return PathSample(cost=float(result.cost[row]), x_terminal=float(result.x_terminal[row]),
                      c_terminal=float(result.c_terminal[row]), spent=float(result.spent[row]),
                      stop_time=None if math.isnan(stop_time) else float(stop_time),
                      truncated=bool(result.truncated[row]), events=events, spent_trace=trace)


@dataclass
class MCEstimate:
    x: float
    c: float
    mean: float
    stderr: float
    bias_budget: float
    n: int
    dt: float
    truncated: int
    costs: np.ndarray = field(repr=False, default=None)
    spent: np.ndarray = field(repr=False, default=None)
    c_terminal: np.ndarray = field(repr=False, default=None)
    events: List[PathEvent] = field(repr=False, default_factory=list)

    def to_record(self) -> Dict[str, Any]:
        return {'x': self.x, 'c': self.c, 'mean': self.mean, 'stderr': self.stderr,
                'bias_budget': self.bias_budget, 'n': self.n, 'dt': self.dt, 'truncated': self.truncated}


def _blocks(cfg: SimConfig) -> List[Tuple[int, int, int]]:
    blocks = []
    start = 0
    block = 0
    while start < cfg.paths:
        size = min(cfg.block_size, cfg.paths - start)
        blocks.append((block, size, start))
        start += size
        block += 1
    return blocks


def mc_estimate(x: float, c: float, pv: PiecewiseValue, cfg: SimConfig) -> MCEstimate:
    """
    Sample mean and standard error of the discounted cost.

    Args:
        x: Start state
        c: Start fuel
        pv: Candidate value function
        cfg: Simulation settings (threads default to FUELCTRL_THREADS)

    Returns:
        MCEstimate; identical seeds give identical results for any thread count
    """
    view = StrategyView(pv)
    _check_start(x, c, view)
    threads = cfg.threads or SolverSettings.from_env().threads
    plan = _blocks(cfg)
    logger.info(f"Simulating {cfg.paths} paths from (x={x}, c={c}) in {len(plan)} blocks on {threads} threads")

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(lambda b: _run_block(x, c, view, cfg, b[0], b[1], b[2]), plan))

    costs = np.concatenate([r.cost for r in results])
    spent = np.concatenate([r.spent for r in results])
    c_terminal = np.concatenate([r.c_terminal for r in results])
    truncated = int(sum(int(np.sum(r.truncated)) for r in results))
    bias = float(np.mean(np.concatenate([r.bias for r in results])))
    events = [e for r in results for e in r.events]
    mean = float(np.mean(costs))
    stderr = float(np.std(costs, ddof=1) / math.sqrt(len(costs)))
    logger.info(f"Estimate at (x={x}, c={c}): {mean} +/- {stderr}, bias budget {bias}")
    return MCEstimate(x=float(x), c=float(c), mean=mean, stderr=stderr, bias_budget=bias, n=len(costs),
                      dt=cfg.dt, truncated=truncated, costs=costs, spent=spent, c_terminal=c_terminal,
                      events=events)


def compare_states(first: Tuple[float, float], second: Tuple[float, float],
                   pv: PiecewiseValue, cfg: SimConfig) -> Dict[str, float]:
    """
    Paired estimate of a cost difference with common random numbers.

    Args:
        first: (x, c) of the first start state
        second: (x, c) of the second start state
        pv: Candidate value function
        cfg: Simulation settings shared by both runs

    Returns:
        Dict with the mean difference and its standard error
    """
    a = mc_estimate(first[0], first[1], pv, cfg)
    b = mc_estimate(second[0], second[1], pv, cfg)
    diff = a.costs - b.costs
    return {'difference': float(np.mean(diff)),
            'stderr': float(np.std(diff, ddof=1) / math.sqrt(len(diff))),
            'first_mean': a.mean, 'second_mean': b.mean}
