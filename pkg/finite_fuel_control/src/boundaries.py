#!/usr/bin/env python3
"""
Moving boundaries F, G, F-bar, G-bar and the critical fuel levels.

Small fuel levels come from common tangents of H_l and the right obstacle
(H_r1, then H_r or the convexified H*_r), marched upward in c with warm
starts. The reflecting part of G beyond c-bar and the pair (F-bar, G-bar)
come from ordinary differential equations in c.
"""

import os
import sys
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import (ProblemParams, Regime, classify, compute_constants, f0,
                   FuelControlError, DomainError, BoundaryError, ConvergenceError,
                   OutOfRangeError, UnsupportedRegimeError, ROOT_XTOL, ROOT_RTOL)
from transform import Obstacle, ObstacleJet, TangentLine, tangent_line, critical_ys
from special_functions import SpecialFunctions
from oneshot import solve_left_right_tangency, right_line_factory

logger = setup_solver_logging('boundaries')

C_START = 1e-4
ODE_RTOL = 1e-9
ODE_ATOL = 1e-12
CURVE_SAMPLES = 401
MAX_HALVINGS = 8
KINDS = ('absorbing', 'repelling', 'reflecting')


def chi(z: float, p: ProblemParams) -> float:
    return SpecialFunctions(p).chi(z)


class BoundaryCurve:
    """
    Sampled boundary x = curve(c) with interpolation and type tags.

    Args:
        name: 'F', 'G', 'Fbar' or 'Gbar'
        c: Increasing fuel samples
        x: Boundary samples
        slopes: Exact dx/dc at the samples (Hermite interpolation when all finite)
        kinds: (c_lo, c_hi, kind) intervals
        exact: Optional exact evaluator used instead of the interpolant
    """

    def __init__(self, name: str, c: Sequence[float], x: Sequence[float],
                 slopes: Optional[Sequence[float]] = None,
                 kinds: Optional[List[Tuple[float, float, str]]] = None,
                 exact: Optional[Callable[[float], float]] = None):
        self.name = name
        self.c = np.asarray(c, dtype=float)
        self.x = np.asarray(x, dtype=float)
        if self.c.size < 2 or self.c.shape != self.x.shape:
            raise BoundaryError(f"curve {name} needs at least two matching samples")
        if np.any(np.diff(self.c) <= 0):
            raise BoundaryError(f"curve {name} samples must be increasing in c")
        self.slopes = None if slopes is None else np.asarray(slopes, dtype=float)
        self.kinds = kinds or []
        for _, _, kind in self.kinds:
            if kind not in KINDS:
                raise ValueError(f"Unknown boundary kind: {kind}")
        self._exact = exact

        if self.slopes is not None and np.all(np.isfinite(self.slopes)):
            self._interp = CubicHermiteSpline(self.c, self.x, self.slopes, extrapolate=False)
        else:
            self._interp = PchipInterpolator(self.c, self.x, extrapolate=False)
        self._deriv = self._interp.derivative()

    @property
    def c_min(self) -> float:
        return float(self.c[0])

    @property
    def c_max(self) -> float:
        return float(self.c[-1])

    def covers(self, c: float) -> bool:
        return self.c_min <= c <= self.c_max

    def __call__(self, c: float) -> float:
        if not self.covers(c):
            raise DomainError(f"{self.name} is sampled on [{self.c_min}, {self.c_max}], got c={c}")
        if self._exact is not None:
            return float(self._exact(c))
        return float(self._interp(c))

    def interpolated(self, c: float) -> float:
        return float(self._interp(c))

    def evaluate(self, cs: np.ndarray) -> np.ndarray:
        """Interpolant on an array of fuel levels, clamped to the sampled range"""
        return self._interp(np.clip(cs, self.c_min, self.c_max))

    def evaluate_slope(self, cs: np.ndarray) -> np.ndarray:
        return self._deriv(np.clip(cs, self.c_min, self.c_max))

    def derivative(self, c: float) -> float:
        if not self.covers(c):
            raise DomainError(f"{self.name}' is sampled on [{self.c_min}, {self.c_max}], got c={c}")
        return float(self._deriv(c))

    def kind_at(self, c: float) -> Optional[str]:
        for lo, hi, kind in self.kinds:
            if lo <= c <= hi:
                return kind
        return None

    def limit_at_zero(self) -> float:
        """Quadratic extrapolation to c = 0 from the three smallest samples"""
        c3, x3 = self.c[:3], self.x[:3]
        total = 0.0
        for i in range(3):
            weight = 1.0
            for j in range(3):
                if j != i:
                    weight *= (0.0 - c3[j]) / (c3[i] - c3[j])
            total += weight * x3[i]
        return float(total)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'c': self.c, self.name: self.x,
                             f'type_{self.name}': [self.kind_at(c) or '' for c in self.c]})


# F-bar / G-bar ---------------------------------------------------------------

class CommunicatingBranch:
    """
    Dense solution of the F-bar ODE on [0, c_I] with G-bar = chi(F-bar).

    The coefficients A-tilde, B-tilde of the second waiting component are the
    tangent slope and intercept of H_r1 at F-bar.
    """

    def __init__(self, p: ProblemParams, sf: SpecialFunctions, ode, c_I: float):
        self.p = p
        self.sf = sf
        self._ode = ode
        self.c_I = float(c_I)
        self.f0 = f0(p)
        self.g0 = sf.chi(self.f0)
        grid = np.linspace(0.0, self.c_I, CURVE_SAMPLES)
        self._gbar_grid = grid
        self._gbar_samples = np.array([self.Gbar(c) for c in grid])
        self._gbar_shift = PchipInterpolator(grid, self._gbar_samples - grid)
        self._gbar_shift_slope = self._gbar_shift.derivative()

    def _clip(self, c: float) -> float:
        if c < -1e-14 or c > self.c_I * (1.0 + 1e-12) + 1e-14:
            raise DomainError(f"F-bar is defined on [0, {self.c_I}], got c={c}")
        return min(max(c, 0.0), self.c_I)

    def Fbar(self, c: float) -> float:
        c = self._clip(c)
        if c == self.c_I:
            return self.sf.a
        return float(self._ode.sol(c)[0])

    def dFbar(self, c: float) -> float:
        c = self._clip(c)
        return fbar_rhs(c, self.Fbar(c), self.sf)

    def Gbar(self, c: float) -> float:
        z = self.Fbar(c)
        if z >= self.sf.a:
            return self.sf.a
        return self.sf.chi(z)

    def dGbar(self, c: float) -> float:
        z = self.Fbar(c)
        if z >= self.sf.a:
            return -math.inf
        return self.sf.dchi(z) * self.dFbar(c)

    def coefficients(self, c: float) -> Tuple[float, float, float, float]:
        """(A-tilde, B-tilde, A-tilde', B-tilde') at fuel c"""
        z = self.Fbar(c)
        line = self.sf.Htilde(z, c)
        dz = self.dFbar(c)
        return (line.slope, line.intercept,
                line.slope_x * dz + line.slope_c,
                line.intercept_x * dz + line.intercept_c)

    def land(self, shift: float) -> float:
        """
        Fuel theta with G-bar(theta) - theta = shift.

        Args:
            shift: x - c of the acting point, in [alpha/(2 lambda) - c_I, g0]

        Returns:
            theta in [0, c_I]
        """
        lo_shift = self.sf.a - self.c_I
        if shift > self.g0 + 1e-12 or shift < lo_shift - 1e-12:
            raise DomainError(f"diagonal with x - c = {shift} does not meet G-bar")
        if shift >= self.g0:
            return 0.0
        if shift <= lo_shift:
            return self.c_I
        theta = brentq(lambda t: float(self._gbar_shift(t)) - shift, 0.0, self.c_I,
                       xtol=ROOT_XTOL, rtol=ROOT_RTOL)
        # Newton on the exact curve; G-bar' < 0 keeps the residual slope below -1
        for _ in range(3):
            residual = self.Gbar(theta) - theta - shift
            if abs(residual) < 1e-14:
                break
            slope = float(self._gbar_shift_slope(theta))
            if not math.isfinite(slope) or slope > -1.0:
                slope = -1.0
            theta = min(max(theta - residual / slope, 0.0), self.c_I)
        return theta


def fbar_rhs(c: float, z: float, sf: SpecialFunctions) -> float:
    line = sf.Htilde(z, c)
    if line.slope_x <= 0.0:
        raise BoundaryError(f"F-bar ODE denominator is not positive at c={c}, F-bar={z}")
    g = sf.chi(z) if z < sf.a else z
    return (sf.h3(g) - sf.s * line.slope - line.slope_c) / line.slope_x


def solve_Fbar_Gbar(p: ProblemParams) -> Tuple[BoundaryCurve, BoundaryCurve, float, CommunicatingBranch]:
    """
    Integrate the F-bar ODE from F-bar(0) = f0 until F-bar reaches alpha/(2 lambda).

    Args:
        p: Problem parameters in the VLambdaShape regime

    Returns:
        (F-bar curve, G-bar curve, c_I, branch)
    """
    if classify(p).regime is not Regime.V_LAMBDA_SHAPE:
        raise UnsupportedRegimeError("F-bar and G-bar exist only for lambda in (lambda_star, lambda_dagger)")
    sf = SpecialFunctions(p)
    k_bar = p.x_half_lambda - p.x_half_delta

    def rhs(c, y):
        return [fbar_rhs(c, float(y[0]), sf)]

    def reaches_a(c, y):
        return y[0] - sf.a
    reaches_a.terminal = True
    reaches_a.direction = 1

    ode = solve_ivp(rhs, (0.0, k_bar), [f0(p)], method='RK45', rtol=ODE_RTOL, atol=ODE_ATOL,
                    dense_output=True, events=[reaches_a])
    if ode.status == -1:
        raise ConvergenceError(f"F-bar integration failed: {ode.message}")
    if len(ode.t_events[0]) == 0:
        raise BoundaryError("F-bar did not reach alpha/(2 lambda) before k_bar")

    c_I = float(ode.t_events[0][0])
    branch = CommunicatingBranch(p, sf, ode, c_I)
    logger.info(f"F-bar reached alpha/(2 lambda) at c_I={c_I}")

    grid = branch._gbar_grid
    fbar = np.array([branch.Fbar(c) for c in grid])
    fbar_slopes = np.array([branch.dFbar(c) for c in grid])
    Fbar = BoundaryCurve('Fbar', grid, fbar, fbar_slopes, [(0.0, c_I, 'repelling')], exact=branch.Fbar)
    Gbar = BoundaryCurve('Gbar', grid, branch._gbar_samples, None, [(0.0, c_I, 'reflecting')], exact=branch.Gbar)
    return Fbar, Gbar, c_I, branch


# convexified right obstacle ------------------------------------------------------

class ConvexifiedRightObstacle:
    """
    h*_r(x;c) for c > c_I: the cost of acting from x with the landing point on
    G-bar when the diagonal through (x, c) meets it, h_r otherwise.
    """

    def __init__(self, p: ProblemParams, c: float, branch: CommunicatingBranch):
        if c <= branch.c_I:
            raise DomainError(f"h*_r needs c > c_I={branch.c_I}, got c={c}")
        self.p = p
        self.c = float(c)
        self.branch = branch
        self.s = p.sqrt2a
        self.D = branch.sf.a - branch.c_I + c
        self.g_edge = branch.g0 + c
        self._outer = Obstacle('right', p, c)

    def landing_fuel(self, x: float) -> float:
        return self.branch.land(x - self.c)

    def jet(self, x: float) -> ObstacleJet:
        x = float(x)
        if x <= self.D or x >= self.g_edge:
            return self._outer.jet(x)
        p = self.p
        theta = self.landing_fuel(x)
        zeta = self.c - theta
        landing = x - zeta
        At, Bt, dAt, dBt = self.branch.coefficients(theta)
        ep, em = math.exp(self.s * landing), math.exp(-self.s * landing)
        q_x = self.s * (At * ep - Bt * em) + 2.0 * p.lam * landing / p.alpha
        q_xx = self.s ** 2 * (At * ep + Bt * em) + 2.0 * p.lam / p.alpha
        q_c = dAt * ep + dBt * em
        running = (p.lam / p.alpha) * (landing ** 2 - x ** 2)
        value = At * ep + Bt * em + running + zeta
        return ObstacleJet(value, q_x - 2.0 * p.lam * x / p.alpha, q_xx - 2.0 * p.lam / p.alpha, q_c, -q_xx)

    def value(self, x: float) -> float:
        return self.jet(x).value

    def line(self, x: float) -> TangentLine:
        return tangent_line(self.jet(x), x, self.p.alpha)


# small and intermediate fuel -------------------------------------------------------

@dataclass(frozen=True)
class TangencySample:
    c: float
    F: float
    G: float
    dF: float
    dG: float
    q: float
    mode: str


def tangency_fuel_derivatives(sf: SpecialFunctions, F: float, G: float, line: TangentLine) -> Tuple[float, float]:
    """
    Implicit derivatives of the contact points in c.

    Args:
        sf: Special functions
        F: Left contact point
        G: Right contact point
        line: Tangent coefficients of the right obstacle at G

    Returns:
        (F'(c), G'(c))
    """
    s = sf.s
    e2F, e2G = math.exp(2.0 * F * s), math.exp(2.0 * G * s)
    dG = (line.intercept_c + e2F * line.slope_c) / (line.slope_x * (e2G - e2F))
    dF = (line.slope_c + line.slope_x * dG) / sf.dh1(F)
    return dF, dG


class TangencyContinuation:
    """Per-fuel solve of the (F, G) tangency with the right obstacle appropriate to c"""

    def __init__(self, p: ProblemParams, branch: Optional[CommunicatingBranch] = None):
        self.p = p
        self.regime = classify(p).regime
        if self.regime not in (Regime.V_SHAPE, Regime.V_LAMBDA_SHAPE):
            raise UnsupportedRegimeError(f"boundary continuation needs lambda in (lambda_star, alpha*delta), regime {self.regime.value}")
        self.sf = SpecialFunctions(p)
        self.branch = branch
        self.c_hat = math.inf

    def mode(self, c: float) -> str:
        if self.branch is not None and c > self.branch.c_I:
            return 'star'
        if c > self.c_hat:
            return 'right'
        return 'right1'

    def line_for(self, c: float, mode: Optional[str] = None) -> Callable[[float], TangentLine]:
        mode = mode or self.mode(c)
        if mode == 'star':
            return ConvexifiedRightObstacle(self.p, c, self.branch).line
        return right_line_factory(mode, self.p, c)

    def solve(self, c: float, guess: Optional[Tuple[float, float]] = None,
              mode: Optional[str] = None) -> TangencySample:
        """
        Exact contact points at fuel c.

        Args:
            c: Fuel level
            guess: Warm start (F, G)
            mode: Force 'right1', 'right' or 'star'

        Returns:
            TangencySample
        """
        mode = mode or self.mode(c)
        crit = critical_ys(c, self.p)
        line_fn = self.line_for(c, mode)
        point = solve_left_right_tangency(self.p, c, line_fn, crit.x_v, crit.x_r,
                                          guess=guess, expand=(mode != 'right1'), sf=self.sf)
        dF, dG = tangency_fuel_derivatives(self.sf, point.x1, point.x2, point.line)
        return TangencySample(c, point.x1, point.x2, dF, dG, self.sf.q(point.x2, point.x1), mode)


def _bisect_failure(solve: Callable[[float], TangencySample], c_good: float, c_bad: float,
                    reason: str, iterations: int = 40) -> float:
    """Fuel level where solve starts raising OutOfRangeError with the given reason"""
    for _ in range(iterations):
        mid = 0.5 * (c_good + c_bad)
        try:
            solve(mid)
            c_good = mid
        except OutOfRangeError as e:
            if e.reason != reason:
                raise
            c_bad = mid
        if c_bad - c_good < 1e-12:
            break
    return 0.5 * (c_good + c_bad)


def solve_FG_small(c_grid: Sequence[float], p: ProblemParams,
                   continuation: Optional[TangencyContinuation] = None) -> Tuple[BoundaryCurve, BoundaryCurve]:
    """
    F and G from the H_l / H_r1 tangency on an increasing fuel grid.

    Args:
        c_grid: Increasing fuel levels in (0, c_0)
        p: Problem parameters
        continuation: Shared continuation state

    Returns:
        (F curve, G curve)
    """
    continuation = continuation or TangencyContinuation(p)
    samples: List[TangencySample] = []
    guess = None
    last_c = None
    for c in c_grid:
        try:
            sample = continuation.solve(float(c), guess, mode='right1')
        except FuelControlError as e:
            raise ConvergenceError(f"small-fuel continuation failed at c={c}; last good c={last_c}: {str(e)}")
        samples.append(sample)
        if last_c is not None:
            step = float(c) - last_c
            guess = (sample.F + sample.dF * step, sample.G + sample.dG * step)
        else:
            guess = (sample.F, sample.G)
        last_c = float(c)
    return _curves_from_samples(samples, math.inf)


def _curves_from_samples(samples: List[TangencySample], c_bar: float) -> Tuple[BoundaryCurve, BoundaryCurve]:
    c = [sample.c for sample in samples]
    last = c[-1]
    F = BoundaryCurve('F', c, [sample.F for sample in samples], [sample.dF for sample in samples],
                      [(0.0, last, 'absorbing')])
    kinds = [(0.0, min(c_bar, last), 'repelling')]
    if c_bar <= last:
        kinds.append((c_bar, last, 'reflecting'))
    G = BoundaryCurve('G', c, [sample.G for sample in samples], [sample.dG for sample in samples], kinds)
    return F, G


@dataclass
class ContinuationState:
    """Samples of the (F, G) continuation and the events seen on the way"""
    samples: List[TangencySample] = field(default_factory=list)
    c_hat: float = math.inf
    c_m: float = math.inf
    c_bar: Optional[float] = None

    @property
    def last(self) -> TangencySample:
        return self.samples[-1]


def extend_FG_intermediate(p: ProblemParams, state: ContinuationState, continuation: TangencyContinuation,
                           c_stop: float, step_scale: float) -> ContinuationState:
    """
    March the (F, G) tangency upward in c until q(G;F) changes sign or c_stop is reached.

    Past c-hat the right contact continues on H_r (through its H_r2 branch); past c_I
    in the VLambdaShape regime it continues on the convexified obstacle H*_r.

    Args:
        p: Problem parameters
        state: Continuation state holding at least one sample
        continuation: Tangency solver
        c_stop: Last fuel level to reach
        step_scale: Fuel scale used to cap the step

    Returns:
        Updated state (c_bar set when the q-residual changed sign)
    """
    c_I = continuation.branch.c_I if continuation.branch is not None else math.inf
    while state.last.c < c_stop and state.last.q > 0:
        prev = state.last
        step = min(prev.c / 10.0, step_scale / 200.0)
        sample = None
        for _ in range(MAX_HALVINGS):
            c = min(prev.c + step, c_stop)
            if prev.c < c_I < c:
                c = c_I
            guess = (prev.F + prev.dF * (c - prev.c), prev.G + prev.dG * (c - prev.c))
            try:
                sample = continuation.solve(c, guess)
                break
            except OutOfRangeError as e:
                if e.reason == 'right_end' and continuation.mode(c) == 'right1':
                    state.c_hat = _bisect_failure(lambda v: continuation.solve(v, mode='right1'),
                                                  prev.c, c, 'right_end')
                    continuation.c_hat = state.c_hat
                    logger.info(f"right contact reached f0 + c at c_hat={state.c_hat}; continuing on H_r")
                    continue
                if e.reason == 'left_end':
                    state.c_m = _bisect_failure(lambda v: continuation.solve(v), prev.c, c, 'left_end')
                    logger.warning(f"left contact reached y = 1 at c_m={state.c_m} before c_bar")
                    return state
                raise
            except (BoundaryError, DomainError) as e:
                logger.debug(f"tangency step failed at c={c}: {str(e)}; halving")
                step *= 0.5
        if sample is None:
            raise ConvergenceError(f"continuation stalled; last good c={prev.c}")
        state.samples.append(sample)
    return state


def find_c_bar(p: ProblemParams, state: ContinuationState,
               continuation: TangencyContinuation) -> Tuple[float, bool]:
    """
    Smallest fuel with q(G(c);F(c)) = 0.

    Args:
        p: Problem parameters
        state: Continuation samples (the last one past the sign change when found)
        continuation: Exact tangency solver used to refine the root

    Returns:
        (c_bar, found); the last sampled fuel level with found = False when q stays positive
    """
    samples = state.samples
    if samples[-1].q > 0 or len(samples) < 2:
        logger.warning(f"q(G;F) stays positive up to c={samples[-1].c}; c_bar not found")
        return samples[-1].c, False

    lo, hi = samples[-2], samples[-1]

    def q_at(c: float) -> float:
        step = c - lo.c
        return continuation.solve(c, (lo.F + lo.dF * step, lo.G + lo.dG * step)).q

    c_bar = brentq(q_at, lo.c, hi.c, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=200)
    exact = continuation.solve(c_bar, (lo.F + lo.dF * (c_bar - lo.c), lo.G + lo.dG * (c_bar - lo.c)))
    samples[-1] = exact
    state.c_bar = c_bar
    logger.info(f"c_bar={c_bar} with q-residual {exact.q}")
    return c_bar, True


# large fuel -------------------------------------------------------------------------

class LargeFuelBranch:
    """F from its ODE beyond c-bar with G the reflecting root of q(.;F)"""

    def __init__(self, p: ProblemParams, sf: SpecialFunctions, ode, c_bar: float, c_end: float):
        self.p = p
        self.sf = sf
        self._ode = ode
        self.c_bar = c_bar
        self.c_end = c_end

    def covers(self, c: float) -> bool:
        return self.c_bar <= c <= self.c_end

    def F(self, c: float) -> float:
        if not self.covers(c):
            raise DomainError(f"large-fuel branch covers [{self.c_bar}, {self.c_end}], got c={c}")
        return float(self._ode.sol(c)[0])

    def G(self, c: float) -> float:
        return self.sf.reflecting_root(self.F(c))

    def sample(self, c: float) -> TangencySample:
        z = self.F(c)
        g = self.sf.reflecting_root(z)
        dz = large_fuel_rhs(z, self.sf, g)
        dg = -self.sf.q_z(g, z) * dz / self.sf.q_x(g, z)
        return TangencySample(c, z, g, dz, dg, 0.0, 'reflecting')


def large_fuel_rhs(z: float, sf: SpecialFunctions, g: Optional[float] = None) -> float:
    g = sf.reflecting_root(z) if g is None else g
    return (sf.h3(g) - sf.s * sf.h1(z)) / sf.dh1(z)


def extend_FG_large(p: ProblemParams, c_bar: float, F_bar: float, c_end: float,
                    sf: Optional[SpecialFunctions] = None) -> LargeFuelBranch:
    """
    Integrate A' + sqrt(2 alpha) A = h3(G) with A = h1(F) beyond c-bar.

    Args:
        p: Problem parameters
        c_bar: Start fuel level
        F_bar: F(c_bar)
        c_end: Last fuel level
        sf: Cached special functions

    Returns:
        LargeFuelBranch (truncated with a warning when F leaves (0, 1/(2 delta)))
    """
    sf = sf or SpecialFunctions(p)
    if c_end <= c_bar:
        c_end = c_bar * (1.0 + 1e-9) + 1e-12

    def rhs(c, y):
        return [large_fuel_rhs(float(y[0]), sf)]

    def leaves_band(c, y):
        return min(y[0], p.x_half_delta - y[0])
    leaves_band.terminal = True
    leaves_band.direction = -1

    ode = solve_ivp(rhs, (c_bar, c_end), [F_bar], method='RK45', rtol=ODE_RTOL, atol=ODE_ATOL,
                    dense_output=True, events=[leaves_band])
    if ode.status == -1:
        raise ConvergenceError(f"large-fuel integration failed: {ode.message}")
    reached = float(ode.t[-1])
    if ode.status == 1:
        logger.warning(f"large-fuel integration halted at c={reached}: F left (0, 1/(2 delta))")
    return LargeFuelBranch(p, sf, ode, c_bar, reached)


# fuel levels --------------------------------------------------------------------------

@dataclass
class FuelLevels:
    c1: float
    c0: float
    c_bar: float
    c_g: float
    c_I: float
    c_star: float
    c_dagger: float
    g0: float
    g_delta: float
    c_hat: float = math.inf
    c_m: float = math.inf
    c_tilde: float = math.inf
    c_bar_found: bool = True
    case: Optional[str] = None

    def to_record(self) -> Dict[str, object]:
        record = {}
        for key, value in self.__dict__.items():
            record[key] = None if isinstance(value, float) and not math.isfinite(value) else value
        return record

    def ordering_checks(self, regime: Regime, k_bar: float) -> Dict[str, bool]:
        checks: Dict[str, bool] = {}
        if regime is Regime.V_LAMBDA_SHAPE:
            checks['g0 < g_delta'] = self.g0 < self.g_delta
            checks['c_I <= c_g < min(c_bar, k_bar)'] = self.c_I <= self.c_g < min(self.c_bar, k_bar)
            checks['c_I < c0'] = self.c_I < self.c0
            checks['c_I < c_star'] = self.c_I < self.c_star
        return checks


def _first_crossing(cs: Sequence[float], values: Sequence[float],
                    exact: Callable[[float], float]) -> float:
    """First sign change of a sampled function refined with the exact evaluator"""
    for k in range(1, len(cs)):
        if values[k - 1] < 0 <= values[k] or values[k - 1] > 0 >= values[k]:
            if values[k] == 0:
                return float(cs[k])
            try:
                return brentq(exact, cs[k - 1], cs[k], xtol=ROOT_XTOL, rtol=ROOT_RTOL)
            except (ValueError, FuelControlError):
                return float(cs[k])
    return math.inf


@dataclass
class BoundarySolution:
    """Solved boundaries, fuel levels and exact per-fuel evaluators"""
    params: ProblemParams
    regime: Regime
    F: Optional[BoundaryCurve]
    G: Optional[BoundaryCurve]
    Fbar: Optional[BoundaryCurve]
    Gbar: Optional[BoundaryCurve]
    levels: Optional[FuelLevels]
    continuation: Optional[TangencyContinuation] = None
    branch: Optional[CommunicatingBranch] = None
    large: Optional[LargeFuelBranch] = None
    warnings: List[str] = field(default_factory=list)
    samples: List[TangencySample] = field(default_factory=list)

    @property
    def c_max(self) -> float:
        if self.F is None:
            return math.inf
        return self.F.c_max

    def exact_FG(self, c: float) -> TangencySample:
        """
        F, G and their fuel derivatives at c from the exact construction.

        Args:
            c: Fuel level within the solved range

        Returns:
            TangencySample
        """
        if self.large is not None and c >= self.large.c_bar:
            return self.large.sample(c)
        if self.F is None or not (0 < c <= self.F.c_max):
            raise DomainError(f"fuel level {c} outside the solved range")
        if c < self.F.c_min:
            guess = (self.F.x[0], self.G.x[0])
        else:
            guess = (self.F.interpolated(c), self.G.interpolated(c))
        return self.continuation.solve(c, guess)

    def phase_frame(self, c_values: Sequence[float]) -> pd.DataFrame:
        """Rows c, F, G, Fbar, Gbar, type_F, type_G with NaN where a boundary is undefined"""
        rows = []
        for c in c_values:
            row = {'c': float(c), 'F': math.nan, 'G': math.nan, 'Fbar': math.nan, 'Gbar': math.nan,
                   'type_F': '', 'type_G': ''}
            if self.regime is Regime.HIGH_COST:
                row.update(F=self.params.x_half_delta, G=self.params.x_half_delta, type_F='absorbing')
            elif self.F is not None and self.F.c_min <= c <= self.F.c_max:
                row.update(F=self.F(c), G=self.G(c), type_F=self.F.kind_at(c) or '', type_G=self.G.kind_at(c) or '')
            if self.Fbar is not None and self.Fbar.covers(c):
                row.update(Fbar=self.Fbar(c), Gbar=self.Gbar(c))
            rows.append(row)
        return pd.DataFrame(rows, columns=['c', 'F', 'G', 'Fbar', 'Gbar', 'type_F', 'type_G'])


def fuel_levels(p: ProblemParams, state: ContinuationState, continuation: TangencyContinuation,
                large: Optional[LargeFuelBranch], branch: Optional[CommunicatingBranch]) -> FuelLevels:
    """
    Critical fuel levels from the continuation samples.

    Args:
        p: Problem parameters
        state: Continuation state after c_bar
        continuation: Exact tangency solver
        large: Large-fuel branch
        branch: F-bar / G-bar branch (VLambdaShape only)

    Returns:
        FuelLevels with orderings checked by ordering_checks
    """
    sf = continuation.sf
    c_bar = state.c_bar if state.c_bar is not None else math.inf
    samples = list(state.samples)
    if large is not None:
        for c in np.linspace(large.c_bar, large.c_end, 101)[1:]:
            samples.append(large.sample(float(c)))
    cs = [sample.c for sample in samples]

    def exact_G(c: float) -> float:
        if large is not None and c >= large.c_bar:
            return large.G(c)
        k = max(i for i, sample in enumerate(state.samples) if sample.c <= c) if c >= state.samples[0].c else 0
        ref = state.samples[k]
        return continuation.solve(c, (ref.F + ref.dF * (c - ref.c), ref.G + ref.dG * (c - ref.c))).G

    a = sf.a
    c_g = _first_crossing(cs, [s.G - a for s in samples], lambda c: exact_G(c) - a)
    g_delta = sf.reflecting_root(p.x_half_delta)

    if branch is not None:
        c_I, g0 = branch.c_I, branch.g0
        D_offset = a - c_I
        tail = [k for k, c in enumerate(cs) if c > c_I]
        c_star = _first_crossing([cs[k] for k in tail], [samples[k].G - (D_offset + cs[k]) for k in tail],
                                 lambda c: exact_G(c) - (D_offset + c))
        c_dagger = _first_crossing(cs, [s.G - (g0 + s.c) for s in samples], lambda c: exact_G(c) - (g0 + c))
        below = [s for s in state.samples if s.c <= c_I]
        c_tilde = math.inf
        for s in below:
            if s.G >= branch.Fbar(s.c):
                c_tilde = s.c
                break
    else:
        c_I, c_star, c_dagger, c_tilde = math.inf, math.inf, math.inf, math.inf
        g0 = math.nan

    c1 = min(state.c_hat, state.c_m)
    c0 = min(c1, c_bar)
    case = None
    if branch is not None and math.isfinite(c_bar):
        if c_bar <= c_star:
            case = 'c_bar<=c_star'
        elif c_bar < c_dagger:
            case = 'c_star<c_bar<c_dagger'
        else:
            case = 'c_dagger<=c_bar'

    return FuelLevels(c1=c1, c0=c0, c_bar=c_bar, c_g=c_g, c_I=c_I, c_star=c_star, c_dagger=c_dagger,
                      g0=g0, g_delta=g_delta, c_hat=state.c_hat, c_m=state.c_m, c_tilde=c_tilde,
                      c_bar_found=state.c_bar is not None, case=case)


def solve_boundaries(p: ProblemParams, c_max: Optional[float] = None,
                     c_start: float = C_START) -> BoundarySolution:
    """
    Solve every moving boundary and critical fuel level.

    Args:
        p: Problem parameters
        c_max: Largest fuel level (3 c_bar by default)
        c_start: Smallest sampled fuel level

    Returns:
        BoundarySolution
    """
    classification = classify(p)
    regime = classification.regime
    logger.info(f"Solving boundaries for {p.to_dict()} in regime {regime.value}")

    if regime is Regime.HIGH_COST:
        return BoundarySolution(p, regime, None, None, None, None, None,
                                warnings=['no waiting region: single vertical boundary at 1/(2 delta)'])
    if regime is Regime.LEGACY_BELOW_STAR:
        raise UnsupportedRegimeError(
            f"lambda={p.lam} <= lambda_star={compute_constants(p).lambda_star}: full boundary solve not supported")

    constants = compute_constants(p)
    warnings: List[str] = []
    if classification.boundary_warning:
        warnings.append('lambda lies on a regime boundary')

    branch = None
    Fbar = Gbar = None
    if regime is Regime.V_LAMBDA_SHAPE:
        Fbar, Gbar, _, branch = solve_Fbar_Gbar(p)

    continuation = TangencyContinuation(p, branch)
    step_scale = max(constants.k_bar, constants.k or 0.0, 1e-3)
    stop = c_max if c_max is not None else 50.0 * step_scale

    state = ContinuationState()
    state.samples.append(continuation.solve(c_start))
    state = extend_FG_intermediate(p, state, continuation, stop, step_scale)
    c_bar, found = find_c_bar(p, state, continuation)

    large = None
    if found:
        c_end = c_max if c_max is not None else 3.0 * c_bar
        if c_end > c_bar:
            large = extend_FG_large(p, c_bar, state.last.F, c_end, continuation.sf)
    else:
        warnings.append(f'c_bar not found below c={c_bar}')

    small = [s for s in state.samples if not found or s.c <= c_bar]
    all_samples = list(small)
    if large is not None:
        for c in np.linspace(large.c_bar, large.c_end, CURVE_SAMPLES)[1:]:
            all_samples.append(large.sample(float(c)))
    F, G = _curves_from_samples(all_samples, c_bar if found else math.inf)

    levels = fuel_levels(p, state, continuation, large, branch)
    for name, ok in levels.ordering_checks(regime, constants.k_bar).items():
        if not ok:
            warnings.append(f'ordering violated: {name}')
            logger.warning(f"fuel-level ordering violated: {name}")

    logger.info(f"Boundaries solved: c_bar={levels.c_bar}, c0={levels.c0}, c_I={levels.c_I}")
    return BoundarySolution(p, regime, F, G, Fbar, Gbar, levels, continuation, branch, large, warnings, small)
