#!/usr/bin/env python3
"""
Natural/transformed scale change and the obstacle functions.

Every right obstacle has the form h(x;c) = W(x - c) + c - l(x) with
l(x) = (lambda/alpha) x^2 + lambda/alpha^2 and W one of the no-fuel costs,
so all derivatives in x and c follow from W, W', W''.
"""

import os
import sys
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import brentq

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import (ProblemParams, DomainError, f0, B0_coefficient,
                   ROOT_XTOL, ROOT_RTOL)

logger = setup_solver_logging('transform')

ArrayLike = Union[float, np.ndarray]

MAX_LOG_Y = 700.0
OBSTACLE_KINDS = ('left', 'right1', 'right2', 'right', 'combined')


class ScaleMap:
    """Scale change y = exp(2 sqrt(2 alpha) x) and the functions phi_alpha, psi_alpha"""

    def __init__(self, alpha: float):
        if alpha <= 0:
            raise DomainError("alpha must be positive")
        self.alpha = alpha
        self.s = math.sqrt(2.0 * alpha)

    def psi(self, x: ArrayLike) -> ArrayLike:
        exponent = 2.0 * self.s * np.asarray(x, dtype=float)
        if np.any(exponent > MAX_LOG_Y):
            raise DomainError(f"psi overflow: 2*sqrt(2 alpha)*x exceeds {MAX_LOG_Y}")
        return np.exp(exponent)

    def psi_inv(self, y: ArrayLike) -> ArrayLike:
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DomainError("psi_inv requires y > 0")
        log_y = np.log(y)
        if np.any(log_y > MAX_LOG_Y):
            raise DomainError(f"y arguments above e^{MAX_LOG_Y:.0f} are rejected")
        return log_y / (2.0 * self.s)

    def phi_alpha(self, x: ArrayLike) -> ArrayLike:
        return np.exp(-self.s * np.asarray(x, dtype=float))

    def psi_alpha(self, x: ArrayLike) -> ArrayLike:
        return np.exp(self.s * np.asarray(x, dtype=float))


def scaled_exp(exponent: ArrayLike, factor: ArrayLike) -> ArrayLike:
    """factor * exp(exponent), recombined in log space"""
    factor = np.asarray(factor, dtype=float)
    exponent = np.asarray(exponent, dtype=float)
    with np.errstate(divide='ignore'):
        log_abs = np.log(np.abs(factor))
    out = np.sign(factor) * np.exp(exponent + log_abs)
    return np.where(factor == 0.0, 0.0, out)


@dataclass(frozen=True)
class ObstacleJet:
    value: float
    dx: float
    dxx: float
    dc: float
    dxc: float


class NoFuelCost:
    """
    Closed-form no-fuel value and its first two derivatives.

    For lambda < alpha*delta: delta u^2 on u <= f0 and
    B0 exp(-u sqrt(2 alpha)) + (lambda/alpha) u^2 + lambda/alpha^2 beyond.
    For lambda >= alpha*delta stopping is immediate and the value is delta u^2.
    """

    def __init__(self, p: ProblemParams):
        self.p = p
        self.high_cost = p.lam >= p.ad
        if self.high_cost:
            self.f0 = None
            self.B0 = None
        else:
            self.f0 = f0(p)
            self.B0 = B0_coefficient(p, self.f0)

    def quadratic(self, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        u = np.asarray(u, dtype=float)
        d = self.p.delta
        return d * u * u, 2.0 * d * u, np.full_like(u, 2.0 * d)

    def tail(self, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        if self.high_cost:
            raise DomainError("the waiting branch of the no-fuel value needs lambda < alpha*delta")
        p = self.p
        s = p.sqrt2a
        u = np.asarray(u, dtype=float)
        e = self.B0 * np.exp(-s * u)
        value = e + (p.lam / p.alpha) * u * u + p.lam / p.alpha ** 2
        d1 = -s * e + 2.0 * p.lam * u / p.alpha
        d2 = 2.0 * p.alpha * e + 2.0 * p.lam / p.alpha
        return value, d1, d2

    def jet(self, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        u = np.asarray(u, dtype=float)
        if self.high_cost:
            return self.quadratic(u)
        au = np.abs(u)
        sign = np.where(u < 0, -1.0, 1.0)
        q0, q1, q2 = self.quadratic(au)
        # tail only evaluated where it is selected, keeps exp(-s u) bounded
        t0, t1, t2 = self.tail(np.maximum(au, self.f0))
        beyond = au > self.f0
        return (np.where(beyond, t0, q0),
                sign * np.where(beyond, t1, q1),
                np.where(beyond, t2, q2))

    def value(self, u: ArrayLike) -> ArrayLike:
        return self.jet(u)[0]


class Obstacle:
    """
    Obstacle h(x;c) of the one-shot problem after the running cost is removed.

    Args:
        kind: one of 'left', 'right1', 'right2', 'right', 'combined'
        p: Problem parameters
        c: Fuel level (ignored by 'left')
    """

    def __init__(self, kind: str, p: ProblemParams, c: float = 0.0):
        if kind not in OBSTACLE_KINDS:
            raise ValueError(f"Unknown obstacle kind: {kind}")
        if c < 0:
            raise DomainError("fuel level must be nonnegative")
        self.kind = kind
        self.p = p
        self.c = float(c)
        self.no_fuel = NoFuelCost(p)
        if kind in ('right2',) and self.no_fuel.high_cost:
            raise DomainError("h_r2 needs lambda < alpha*delta")

    @property
    def x_c(self) -> float:
        """Crossing point of h_l and h_r1"""
        return self.p.x_half_delta + self.c / 2.0

    def _running(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        p = self.p
        return (p.lam / p.alpha) * x * x + p.lam / p.alpha ** 2, 2.0 * p.lam * x / p.alpha, 2.0 * p.lam / p.alpha

    def _cost_jet(self, kind: str, u: np.ndarray):
        if kind == 'right1':
            return self.no_fuel.quadratic(u)
        if kind == 'right2':
            return self.no_fuel.tail(u)
        return self.no_fuel.jet(u)

    def _arrays(self, x: ArrayLike):
        x = np.asarray(x, dtype=float)
        l0, l1, l2 = self._running(x)

        left = self.no_fuel.quadratic(x)
        left_arrays = (left[0] - l0, left[1] - l1, left[2] - l2,
                       np.zeros_like(x), np.zeros_like(x))
        if self.kind == 'left':
            return left_arrays

        right_kind = 'right' if self.kind == 'combined' else self.kind
        w0, w1, w2 = self._cost_jet(right_kind, x - self.c)
        right_arrays = (w0 + self.c - l0, w1 - l1, w2 - l2, 1.0 - w1, -w2)
        if self.kind != 'combined':
            return right_arrays

        if self.no_fuel.high_cost:
            use_left = left_arrays[0] <= right_arrays[0]
        else:
            use_left = x <= self.x_c
        return tuple(np.where(use_left, a, b) for a, b in zip(left_arrays, right_arrays))

    def value(self, x: ArrayLike) -> ArrayLike:
        return self._arrays(x)[0]

    def dx(self, x: ArrayLike) -> ArrayLike:
        return self._arrays(x)[1]

    def dxx(self, x: ArrayLike) -> ArrayLike:
        return self._arrays(x)[2]

    def generator(self, x: ArrayLike) -> ArrayLike:
        """(L - alpha) h with L = 1/2 d^2/dx^2"""
        arrays = self._arrays(x)
        return 0.5 * arrays[2] - self.p.alpha * arrays[0]

    def jet(self, x: float) -> ObstacleJet:
        arrays = self._arrays(float(x))
        return ObstacleJet(*(float(a) for a in arrays))


class TransformedObstacle:
    """H(y;c) = h(psi_inv(y);c)/phi_alpha(psi_inv(y)) with first and second y-derivatives"""

    def __init__(self, source: Obstacle):
        self.source = source
        self.map = ScaleMap(source.p.alpha)

    def at_x(self, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """
        Evaluate H and its y-derivatives at y = psi(x).

        Args:
            x: Natural-scale points

        Returns:
            (H, dH/dy, d2H/dy2)
        """
        x = np.asarray(x, dtype=float)
        s = self.map.s
        h, h1, h2, _, _ = self.source._arrays(x)
        value = scaled_exp(s * x, h)
        d1 = scaled_exp(-s * x, (h1 + s * h) / (2.0 * s))
        d2 = scaled_exp(-3.0 * s * x, (0.5 * h2 - self.source.p.alpha * h) / (4.0 * self.source.p.alpha))
        return value, d1, d2

    def at_y(self, y: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        y_arr = np.asarray(y, dtype=float)
        if np.any(y_arr < 1.0):
            raise DomainError("transformed obstacles are evaluated on y >= 1")
        return self.at_x(self.map.psi_inv(y_arr))

    def trace(self, y: ArrayLike) -> pd.DataFrame:
        """Obstacle trace with columns y, H, dH, d2H"""
        value, d1, d2 = self.at_y(y)
        return pd.DataFrame({'y': np.asarray(y, dtype=float), 'H': value, 'dH': d1, 'd2H': d2})


def eval_Hl(y: ArrayLike, p: ProblemParams) -> ArrayLike:
    """Closed form of the transformed left obstacle"""
    y = np.asarray(y, dtype=float)
    if np.any(y < 1.0):
        raise DomainError("eval_Hl requires y >= 1")
    log_y = np.log(y)
    return np.sqrt(y) * (-p.lam / p.alpha ** 2 + ((p.delta - p.lam / p.alpha) / (8.0 * p.alpha)) * log_y ** 2)


def eval_Hr(y: ArrayLike, c: float, p: ProblemParams) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Transformed right obstacle H_r(y;c) with two y-derivatives"""
    if c <= 0:
        raise DomainError("eval_Hr requires c > 0")
    return TransformedObstacle(Obstacle('right', p, c)).at_y(y)


@dataclass(frozen=True)
class CriticalPoints:
    x_c: float
    x_r: float
    x_m: float
    x_v: float
    y_c: float
    y_r: float
    y_m: float
    y_v: float


def inflection_x_v(c: float, p: ProblemParams) -> float:
    """Zero of (L - alpha) h_r1 in [x_c, f0 + c] when c > K, otherwise x_c"""
    obstacle = Obstacle('right1', p, c)
    x_c = obstacle.x_c
    x_r = f0(p) + c
    K = 2.0 * (math.sqrt(p.delta / (p.ad - p.lam)) - p.x_half_delta)
    if c <= K:
        return x_c

    def gen(x: float) -> float:
        return float(obstacle.generator(x))

    g_lo, g_hi = gen(x_c), gen(x_r)
    if g_lo >= 0:
        return x_c
    if g_hi <= 0:
        logger.warning(f"(L-alpha)h_r1 does not change sign on [x_c, f0+c] at c={c}")
        return x_r
    return brentq(gen, x_c, x_r, xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def critical_ys(c: float, p: ProblemParams) -> CriticalPoints:
    """
    Critical points of the transformed obstacles at fuel level c.

    Args:
        c: Positive fuel level
        p: Problem parameters with lambda < alpha*delta

    Returns:
        CriticalPoints in both scales
    """
    if c <= 0:
        raise DomainError("critical_ys requires c > 0")
    scale = ScaleMap(p.alpha)
    x_c = p.x_half_delta + c / 2.0
    x_r = f0(p) + c
    x_m = p.x_half_lambda + c / 2.0
    x_v = inflection_x_v(c, p)
    return CriticalPoints(x_c, x_r, x_m, x_v,
                          float(scale.psi(x_c)), float(scale.psi(x_r)),
                          float(scale.psi(x_m)), float(scale.psi(x_v)))


@dataclass(frozen=True)
class TangentLine:
    """Slope and vertical-axis intercept of the tangent to Phi(g) at y = psi(x), with derivatives"""
    slope: float
    intercept: float
    slope_x: float
    intercept_x: float
    slope_c: float
    intercept_c: float


def tangent_line(jet: ObstacleJet, x: float, alpha: float) -> TangentLine:
    """
    Tangent coefficients of the transformed obstacle.

    Args:
        jet: Obstacle value and derivatives at x
        x: Natural-scale point
        alpha: Discount rate

    Returns:
        TangentLine
    """
    s = math.sqrt(2.0 * alpha)
    em = math.exp(-s * x)
    ep = math.exp(s * x)
    curvature = jet.dxx - s * s * jet.value
    return TangentLine(
        slope=em * (jet.dx + s * jet.value) / (2.0 * s),
        intercept=ep * (-jet.dx + s * jet.value) / (2.0 * s),
        slope_x=em * curvature / (2.0 * s),
        intercept_x=-ep * curvature / (2.0 * s),
        slope_c=em * (jet.dxc + s * jet.dc) / (2.0 * s),
        intercept_c=ep * (-jet.dxc + s * jet.dc) / (2.0 * s),
    )

