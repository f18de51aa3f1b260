#!/usr/bin/env python3
"""
Candidate value function Q(x,c) assembled from the solved boundaries.

Regions: I stop, II and III wait (Feynman-Kac pieces), IV act. Region IV is
split by where the diagonal shift (x - u, c - u) first meets a reflecting
boundary: IVa on the reflecting part of G, IVb on G-bar, IVc when the fuel
runs out first.
"""

import os
import sys
import math
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import ProblemParams, Regime, DomainError, FuelControlError, ROOT_XTOL, ROOT_RTOL
from transform import NoFuelCost, Obstacle, ScaleMap, scaled_exp
from boundaries import BoundarySolution, ConvexifiedRightObstacle, solve_boundaries

logger = setup_solver_logging('valuefn')

REGIONS = ('I', 'II', 'III', 'IVa', 'IVb', 'IVc')


@dataclass(frozen=True)
class RegionTag:
    region: str
    zeta: float = 0.0
    landing_fuel: Optional[float] = None


@dataclass(frozen=True)
class FuelSlice:
    """Boundaries and Feynman-Kac coefficients at one fuel level"""
    c: float
    F: float
    G: float
    A: float
    B: float
    dA: float
    dB: float
    Fbar: Optional[float] = None
    Gbar: Optional[float] = None
    At: Optional[float] = None
    Bt: Optional[float] = None
    dAt: Optional[float] = None
    dBt: Optional[float] = None

    @property
    def communicating(self) -> bool:
        return self.Fbar is not None


class PiecewiseValue:
    """
    Candidate value function over the solved boundaries.

    Args:
        solution: Output of solve_boundaries
    """

    def __init__(self, solution: BoundarySolution):
        self.solution = solution
        self.params = solution.params
        self.regime = solution.regime
        self.levels = solution.levels
        self.s = self.params.sqrt2a
        self.no_fuel = NoFuelCost(self.params)
        self._slices: Dict[float, FuelSlice] = {}
        self._communicating: Dict[float, Tuple[float, ...]] = {}
        self._lock = threading.Lock()
        self._segments: Optional[List[Dict[str, float]]] = None

    @classmethod
    def from_params(cls, p: ProblemParams, c_max: Optional[float] = None) -> 'PiecewiseValue':
        return cls(solve_boundaries(p, c_max=c_max))

    @property
    def high_cost(self) -> bool:
        return self.regime is Regime.HIGH_COST

    @property
    def c_max(self) -> float:
        return self.solution.c_max

    # per-fuel data -----------------------------------------------------------

    def communicating(self, c: float) -> Tuple[float, float, float, float, float, float]:
        """(F-bar, G-bar, A-tilde, B-tilde, A-tilde', B-tilde') for 0 <= c <= c_I"""
        branch = self.solution.branch
        if branch is None or c > branch.c_I:
            raise DomainError(f"no second waiting component at c={c}")
        with self._lock:
            cached = self._communicating.get(c)
        if cached is not None:
            return cached
        At, Bt, dAt, dBt = branch.coefficients(c)
        result = (branch.Fbar(c), branch.Gbar(c), At, Bt, dAt, dBt)
        with self._lock:
            self._communicating[c] = result
        return result

    def slice(self, c: float) -> FuelSlice:
        """
        Exact boundaries and coefficients at fuel c.

        Args:
            c: Positive fuel level within the solved range

        Returns:
            FuelSlice (cached)
        """
        if self.high_cost:
            raise DomainError("no waiting region for lambda >= alpha*delta")
        if c <= 0:
            raise DomainError("slices are defined for c > 0")
        with self._lock:
            cached = self._slices.get(c)
        if cached is not None:
            return cached

        sf = self.solution.continuation.sf
        sample = self.solution.exact_FG(c)
        A, B = sf.h1(sample.F), sf.h2(sample.F)
        dA, dB = sf.dh1(sample.F) * sample.dF, sf.dh2(sample.F) * sample.dF
        extra = {}
        branch = self.solution.branch
        if branch is not None and c < branch.c_I:
            Fbar, Gbar, At, Bt, dAt, dBt = self.communicating(c)
            extra = dict(Fbar=Fbar, Gbar=Gbar, At=At, Bt=Bt, dAt=dAt, dBt=dBt)
        result = FuelSlice(c, sample.F, sample.G, A, B, dA, dB, **extra)
        with self._lock:
            self._slices[c] = result
        return result

    # regions --------------------------------------------------------------------

    def _reflecting_G_landing(self, shift: float, c: float) -> Optional[float]:
        large = self.solution.large
        if large is None or c <= large.c_bar:
            return None
        c_end = min(c, large.c_end)
        top = large.G(large.c_bar) - large.c_bar
        if shift > top:
            return None
        low = large.G(c_end) - c_end
        if shift < low:
            return None
        if shift == top:
            return large.c_bar
        return brentq(lambda t: large.G(t) - t - shift, large.c_bar, c_end, xtol=ROOT_XTOL, rtol=ROOT_RTOL)

    def classify_region(self, x: float, c: float) -> RegionTag:
        """
        Region of (|x|, c) with the acting displacement in region IV.

        Args:
            x: State
            c: Fuel level

        Returns:
            RegionTag
        """
        x = abs(float(x))
        p = self.params
        if c < 0:
            raise DomainError("fuel level must be nonnegative")
        if self.high_cost:
            hd = p.x_half_delta
            if x <= hd:
                return RegionTag('I')
            return RegionTag('IVc', zeta=min(c, x - hd))
        if c == 0:
            return RegionTag('I') if x <= self.no_fuel.f0 else RegionTag('II')

        sl = self.slice(c)
        if x <= sl.F:
            return RegionTag('I')
        if x <= sl.G:
            return RegionTag('II')
        if sl.communicating and sl.Fbar <= x <= sl.Gbar:
            return RegionTag('III')

        shift = x - c
        theta = self._reflecting_G_landing(shift, c)
        if theta is not None:
            return RegionTag('IVa', zeta=c - theta, landing_fuel=theta)

        branch = self.solution.branch
        if branch is not None and branch.sf.a - branch.c_I <= shift <= branch.g0:
            if not sl.communicating or x > sl.Gbar:
                theta = branch.land(shift)
                return RegionTag('IVb', zeta=c - theta, landing_fuel=theta)
        return RegionTag('IVc', zeta=c)

    def zeta(self, x: float, c: float) -> float:
        """Fuel spent when acting from (|x|, c); zero outside region IV"""
        tag = self.classify_region(x, c)
        return tag.zeta if tag.region.startswith('IV') else 0.0

    # piece formulas ------------------------------------------------------------------

    def _running(self, x: float) -> float:
        p = self.params
        return (p.lam / p.alpha) * x * x + p.lam / p.alpha ** 2

    def _fk_value(self, A: float, B: float, x: float) -> float:
        return A * math.exp(self.s * x) + B * math.exp(-self.s * x) + self._running(x)

    def _fk_dx(self, A: float, B: float, x: float) -> float:
        p = self.params
        return self.s * (A * math.exp(self.s * x) - B * math.exp(-self.s * x)) + 2.0 * p.lam * x / p.alpha

    def _fk_U(self, A: float, B: float, dA: float, dB: float, x: float) -> float:
        p = self.params
        return ((self.s * A + dA) * math.exp(self.s * x) + (dB - self.s * B) * math.exp(-self.s * x)
                + 2.0 * p.lam * x / p.alpha)

    def _fk_U_dx(self, A: float, B: float, dA: float, dB: float, x: float) -> float:
        p = self.params
        return (self.s * (self.s * A + dA) * math.exp(self.s * x)
                - self.s * (dB - self.s * B) * math.exp(-self.s * x) + 2.0 * p.lam / p.alpha)

    def _landing_value(self, region: str, theta: float) -> Tuple[float, float]:
        """Value and x-derivative at the landing point on G (IVa) or G-bar (IVb)"""
        if region == 'IVa':
            sl = self.slice(theta)
            return self._fk_value(sl.A, sl.B, sl.G), self._fk_dx(sl.A, sl.B, sl.G)
        _, Gbar, At, Bt, _, _ = self.communicating(theta)
        return self._fk_value(At, Bt, Gbar), self._fk_dx(At, Bt, Gbar)

    def piece_value(self, region: str, x: float, c: float, zeta: Optional[float] = None) -> float:
        """
        Formula of one region evaluated at (x, c), also slightly outside the region.

        Args:
            region: Region name
            x: Nonnegative state
            c: Fuel level
            zeta: Displacement for IVa/IVb (computed when omitted)

        Returns:
            Piece value
        """
        if region == 'I':
            return self.params.delta * x * x
        if region == 'II':
            sl = self.slice(c)
            return self._fk_value(sl.A, sl.B, x)
        if region == 'III':
            _, _, At, Bt, _, _ = self.communicating(c)
            return self._fk_value(At, Bt, x)
        if region == 'IVc':
            return float(self.no_fuel.value(x - c)) + c
        if zeta is None:
            zeta = self._zeta_for(region, x, c)
        return self._landing_value(region, c - zeta)[0] + zeta

    def piece_dx(self, region: str, x: float, c: float, zeta: Optional[float] = None) -> float:
        if region == 'I':
            return 2.0 * self.params.delta * x
        if region == 'II':
            sl = self.slice(c)
            return self._fk_dx(sl.A, sl.B, x)
        if region == 'III':
            _, _, At, Bt, _, _ = self.communicating(c)
            return self._fk_dx(At, Bt, x)
        if region == 'IVc':
            return float(self.no_fuel.jet(x - c)[1])
        if zeta is None:
            zeta = self._zeta_for(region, x, c)
        return self._landing_value(region, c - zeta)[1]

    def _zeta_for(self, region: str, x: float, c: float) -> float:
        shift = x - c
        if region == 'IVa':
            large = self.solution.large
            theta = brentq(lambda t: large.G(t) - t - shift, large.c_bar, min(c, large.c_end),
                           xtol=ROOT_XTOL, rtol=ROOT_RTOL)
        else:
            theta = self.solution.branch.land(shift)
        return c - theta

    # value and marginal -------------------------------------------------------------

    def value(self, x: float, c: float) -> float:
        """
        Q(x, c), even in x.

        Args:
            x: State
            c: Nonnegative fuel level

        Returns:
            Candidate value
        """
        x = abs(float(x))
        p = self.params
        if c < 0:
            raise DomainError("fuel level must be nonnegative")
        if c == 0:
            return float(self.no_fuel.value(x))
        if self.high_cost:
            hd = p.x_half_delta
            if x <= hd:
                return p.delta * x * x
            if x < hd + c:
                return 1.0 / (4.0 * p.delta) + x - hd
            return p.delta * (x - c) ** 2 + c
        tag = self.classify_region(x, c)
        return self.piece_value(tag.region, x, c, tag.zeta)

    def values(self, xs: Sequence[float], c: float) -> np.ndarray:
        """Q on a row of states at one fuel level"""
        xs = np.abs(np.asarray(xs, dtype=float))
        if c == 0 or self.high_cost:
            return np.array([self.value(x, c) for x in xs])
        p = self.params
        sl = self.slice(c)
        out = np.empty_like(xs)
        stop = xs <= sl.F
        wait = (~stop) & (xs <= sl.G)
        out[stop] = p.delta * xs[stop] ** 2
        running = (p.lam / p.alpha) * xs ** 2 + p.lam / p.alpha ** 2
        out[wait] = (scaled_exp(self.s * xs[wait], sl.A) + scaled_exp(-self.s * xs[wait], sl.B)
                     + running[wait])
        rest = ~(stop | wait)
        if sl.communicating:
            second = rest & (xs >= sl.Fbar) & (xs <= sl.Gbar)
            out[second] = (scaled_exp(self.s * xs[second], sl.At) + scaled_exp(-self.s * xs[second], sl.Bt)
                           + running[second])
            rest &= ~second

        # points whose diagonal can meet neither G nor G-bar exhaust the fuel
        shift = xs - c
        may_land = np.zeros_like(rest)
        large = self.solution.large
        if large is not None and c > large.c_bar:
            may_land |= shift <= large.G(large.c_bar) - large.c_bar
        branch = self.solution.branch
        if branch is not None:
            may_land |= (shift >= branch.sf.a - branch.c_I) & (shift <= branch.g0)
        exhaust = rest & ~may_land
        out[exhaust] = self.no_fuel.value(xs[exhaust] - c) + c
        rest &= may_land
        for k in np.flatnonzero(rest):
            tag = self.classify_region(xs[k], c)
            out[k] = self.piece_value(tag.region, float(xs[k]), c, tag.zeta)
        return out

    def marginal_U(self, x: float, c: float, with_flag: bool = False):
        """
        (d/dx + d/dc) Q.

        Args:
            x: Nonnegative state
            c: Positive fuel level
            with_flag: Also return whether (x, c) sits on a non-smooth segment

        Returns:
            U, or (U, flag) when with_flag is set
        """
        x = abs(float(x))
        if c <= 0:
            raise DomainError("U is defined for c > 0")
        if self.high_cost:
            U = 2.0 * self.params.delta * x if x <= self.params.x_half_delta else 1.0
        else:
            tag = self.classify_region(x, c)
            if tag.region == 'I':
                U = 2.0 * self.params.delta * x
            elif tag.region == 'II':
                sl = self.slice(c)
                U = self._fk_U(sl.A, sl.B, sl.dA, sl.dB, x)
            elif tag.region == 'III':
                _, _, At, Bt, dAt, dBt = self.communicating(c)
                U = self._fk_U(At, Bt, dAt, dBt, x)
            else:
                U = 1.0
        if with_flag:
            return U, self.near_nonsmooth(x, c, 1e-12, 1e-12)
        return U

    def marginal_U_dx(self, region: str, x: float, c: float) -> float:
        """Analytic x-derivative of U on the waiting pieces"""
        if region == 'II':
            sl = self.slice(c)
            return self._fk_U_dx(sl.A, sl.B, sl.dA, sl.dB, x)
        if region == 'III':
            _, _, At, Bt, dAt, dBt = self.communicating(c)
            return self._fk_U_dx(At, Bt, dAt, dBt, x)
        if region == 'I':
            return 2.0 * self.params.delta
        return 0.0

    def piece_U(self, region: str, x: float, c: float) -> float:
        if region == 'II':
            sl = self.slice(c)
            return self._fk_U(sl.A, sl.B, sl.dA, sl.dB, x)
        if region == 'III':
            _, _, At, Bt, dAt, dBt = self.communicating(c)
            return self._fk_U(At, Bt, dAt, dBt, x)
        if region == 'I':
            return 2.0 * self.params.delta * x
        return 1.0

    # convexified obstacle ------------------------------------------------------------

    def hstar_r(self, x: float, c: float) -> float:
        """
        Convexified repulsion obstacle h*_r(x;c).

        Args:
            x: State beyond 1/(2 delta) + c/2
            c: Fuel level above c_I (any c > 0 when there is no G-bar)

        Returns:
            h*_r value
        """
        branch = self.solution.branch
        if branch is None:
            return float(Obstacle('right', self.params, c).value(x))
        return ConvexifiedRightObstacle(self.params, c, branch).value(x)

    def hstar_r_transformed(self, y: Sequence[float], c: float) -> np.ndarray:
        scale = ScaleMap(self.params.alpha)
        xs = np.asarray(scale.psi_inv(np.asarray(y, dtype=float)), dtype=float)
        return np.array([math.exp(self.s * x) * self.hstar_r(x, c) for x in xs])

    # non-smooth set -------------------------------------------------------------------

    def nonsmooth_segments(self) -> List[Dict[str, float]]:
        """
        Lines where Q may fail to be twice differentiable.

        Returns:
            Records {'kind': 'horizontal', 'c': ...} or {'kind': 'diagonal', 'shift': ..., 'c_from': ...}
        """
        if self._segments is not None:
            return self._segments
        segments: List[Dict[str, float]] = []
        if self.high_cost:
            hd = self.params.x_half_delta
            return [{'kind': 'diagonal', 'shift': hd, 'c_from': 0.0},
                    {'kind': 'vertical', 'x': hd, 'c_from': 0.0}]
        levels = self.levels
        for name in ('c_bar', 'c_I', 'c_star', 'c_dagger', 'c0', 'c_hat'):
            value = getattr(levels, name)
            if math.isfinite(value):
                segments.append({'kind': 'horizontal', 'c': value, 'name': name})
        segments.append({'kind': 'diagonal', 'shift': self.no_fuel.f0, 'c_from': 0.0})
        large = self.solution.large
        if large is not None:
            segments.append({'kind': 'diagonal', 'shift': large.G(large.c_bar) - large.c_bar,
                             'c_from': large.c_bar})
        branch = self.solution.branch
        if branch is not None:
            segments.append({'kind': 'diagonal', 'shift': branch.g0, 'c_from': 0.0})
            segments.append({'kind': 'diagonal', 'shift': branch.sf.a - branch.c_I, 'c_from': branch.c_I})
        self._segments = segments
        return segments

    def near_nonsmooth(self, x: float, c: float, margin_x: float, margin_c: float) -> bool:
        """True near a free boundary or a segment of possible C2 failure"""
        x = abs(float(x))
        for segment in self.nonsmooth_segments():
            if segment['kind'] == 'horizontal' and abs(c - segment['c']) <= margin_c:
                return True
            if segment['kind'] == 'vertical' and abs(x - segment['x']) <= margin_x:
                return True
            if (segment['kind'] == 'diagonal' and c >= segment['c_from'] - margin_c
                    and abs(x - c - segment['shift']) <= margin_x + margin_c):
                return True
        if self.high_cost or c <= 0:
            return False
        sl = self.slice(c)
        edges = [sl.F, sl.G]
        if sl.communicating:
            edges += [sl.Fbar, sl.Gbar]
        return any(abs(x - edge) <= margin_x for edge in edges)

    # exports ---------------------------------------------------------------------------

    def surface_frame(self, x_grid: Sequence[float], c_grid: Sequence[float]) -> pd.DataFrame:
        """Value surface with columns x, c, Q, region, U"""
        rows = []
        for c in c_grid:
            c = float(c)
            q_row = self.values(x_grid, c)
            for x, q in zip(x_grid, q_row):
                x = float(x)
                if c > 0:
                    region = self.classify_region(x, c).region
                    U = self.marginal_U(x, c)
                else:
                    region = 'I' if self.high_cost or x <= self.no_fuel.f0 else 'II'
                    U = math.nan
                rows.append({'x': x, 'c': c, 'Q': float(q), 'region': region, 'U': U})
        return pd.DataFrame(rows, columns=['x', 'c', 'Q', 'region', 'U'])

    def coefficient_summary(self, c_values: Sequence[float]) -> Dict[str, List[Optional[float]]]:
        """A, B, A-tilde, B-tilde sampled in c (null where undefined)"""
        summary: Dict[str, List[Optional[float]]] = {'c': [], 'A': [], 'B': [], 'A_tilde': [], 'B_tilde': []}
        for c in c_values:
            c = float(c)
            sl = self.slice(c)
            summary['c'].append(c)
            summary['A'].append(sl.A)
            summary['B'].append(sl.B)
            summary['A_tilde'].append(sl.At)
            summary['B_tilde'].append(sl.Bt)
        return summary


def build_value(p: ProblemParams, c_max: Optional[float] = None) -> PiecewiseValue:
    """Solve the boundaries and wrap them as a PiecewiseValue"""
    try:
        return PiecewiseValue.from_params(p, c_max=c_max)
    except FuelControlError as e:
        logger.error(f"value function assembly failed: {str(e)}")
        raise
