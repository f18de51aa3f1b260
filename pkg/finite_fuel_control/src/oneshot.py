#!/usr/bin/env python3
"""
No-fuel and one-shot stopping problems.

Both are solved through the greatest non-positive convex minorant W of the
transformed obstacle: analytically through common tangents, and numerically
through a discrete lower convex envelope used as a cross-check.
"""

import os
import sys
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import (ProblemParams, Regime, classify, f0,
                   FuelControlError, BoundaryError, OutOfRangeError, NoSecondTangentError,
                   MinorantError, UnsupportedRegimeError, ROOT_XTOL, ROOT_RTOL)
from transform import (Obstacle, NoFuelCost, ScaleMap, TransformedObstacle, TangentLine,
                       tangent_line, critical_ys)
from special_functions import SpecialFunctions

logger = setup_solver_logging('oneshot')

CONTACT_RTOL = 1e-7
NEWTON_TOL = 1e-13
NEWTON_ACCEPT = 1e-11
DEFAULT_SAMPLES = 20000
REFINE_SAMPLES = 2001


@dataclass(frozen=True)
class MinorantPiece:
    kind: str                    # 'obstacle' or 'linear'
    y_lo: float
    y_hi: float                  # math.inf for the tail piece
    A: Optional[float] = None
    B: Optional[float] = None

    def to_record(self) -> Dict[str, Optional[float]]:
        return {
            'kind': self.kind,
            'y_lo': self.y_lo,
            'y_hi': None if math.isinf(self.y_hi) else self.y_hi,
            'A': self.A,
            'B': self.B,
        }


@dataclass
class OneShotSolution:
    """Minorant pieces of the one-shot problem at fuel c and the assembled value"""
    c: float
    params: ProblemParams
    pieces: List[MinorantPiece]
    method: str = 'analytic'
    stopping_set: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        scale = ScaleMap(self.params.alpha)
        self._scale = scale
        self._cost = Obstacle('combined', self.params, self.c) if self.c > 0 else Obstacle('left', self.params)
        self._no_fuel = NoFuelCost(self.params)
        self.stopping_set = [
            (float(scale.psi_inv(piece.y_lo)),
             math.inf if math.isinf(piece.y_hi) else float(scale.psi_inv(piece.y_hi)))
            for piece in self.pieces if piece.kind == 'obstacle'
        ]

    @property
    def linear_pieces(self) -> List[MinorantPiece]:
        return [piece for piece in self.pieces if piece.kind == 'linear']

    def _stop_cost(self, x: float) -> float:
        """min{delta x^2, V0(x - c) + c} for c > 0, delta x^2 for c = 0"""
        if self.c == 0:
            return self.params.delta * x * x
        return min(self.params.delta * x * x, float(self._no_fuel.value(x - self.c)) + self.c)

    def value(self, x: float) -> float:
        x = abs(float(x))
        p = self.params
        y = math.exp(2.0 * p.sqrt2a * x)
        for piece in self.pieces:
            if piece.y_lo <= y <= piece.y_hi:
                if piece.kind == 'obstacle':
                    return self._stop_cost(x)
                s = p.sqrt2a
                return (piece.A * math.exp(s * x) + piece.B * math.exp(-s * x)
                        + (p.lam / p.alpha) * x * x + p.lam / p.alpha ** 2)
        raise MinorantError(f"no minorant piece covers y={y}")

    def W(self, y: float) -> float:
        """Minorant in the transformed scale"""
        for piece in self.pieces:
            if piece.y_lo <= y <= piece.y_hi:
                if piece.kind == 'linear':
                    return piece.A * y + piece.B
                x = float(self._scale.psi_inv(y))
                return math.exp(self.params.sqrt2a * x) * (self._stop_cost(x) - (self.params.lam / self.params.alpha) * x * x
                                                           - self.params.lam / self.params.alpha ** 2)
        raise MinorantError(f"no minorant piece covers y={y}")

    def to_records(self) -> List[Dict[str, Optional[float]]]:
        return [piece.to_record() for piece in self.pieces]


def no_fuel_value(x: float, p: ProblemParams) -> float:
    return float(NoFuelCost(p).value(abs(x)))


def solve_V0(p: ProblemParams) -> OneShotSolution:
    """
    Value function without fuel.

    Args:
        p: Problem parameters

    Returns:
        OneShotSolution at c = 0 (stop on [0, f0], wait beyond; stop everywhere when lambda >= alpha*delta)
    """
    if p.lam >= p.ad:
        return OneShotSolution(0.0, p, [MinorantPiece('obstacle', 1.0, math.inf)])
    fz = f0(p)
    y_f0 = math.exp(2.0 * p.sqrt2a * fz)
    B0 = NoFuelCost(p).B0
    return OneShotSolution(0.0, p, [MinorantPiece('obstacle', 1.0, y_f0),
                                    MinorantPiece('linear', y_f0, math.inf, A=0.0, B=B0)])


# numeric envelope ---------------------------------------------------------

def _lower_hull(y: List[float], h: List[float]) -> List[int]:
    hull: List[int] = []
    for k in range(len(y)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (y[a] - y[o]) * (h[k] - h[o]) - (h[a] - h[o]) * (y[k] - y[o])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    return hull


def convex_minorant_numeric(y: np.ndarray, H: np.ndarray,
                            contact_rtol: float = CONTACT_RTOL) -> List[MinorantPiece]:
    """
    Discrete greatest non-positive convex minorant.

    Args:
        y: Increasing sample points starting at 1
        H: Obstacle samples
        contact_rtol: Contact tolerance relative to 1 + |H|

    Returns:
        Pieces covering [y[0], infinity); the tail is either the obstacle or a flat line
    """
    y = np.asarray(y, dtype=float)
    H = np.asarray(H, dtype=float)
    if y.ndim != 1 or y.shape != H.shape or y.size < 3:
        raise MinorantError("need matching one-dimensional samples with at least 3 points")
    if np.any(np.diff(y) <= 0):
        raise MinorantError("sample points must be strictly increasing")

    capped = np.minimum(H, 0.0)
    hull = _lower_hull(y.tolist(), capped.tolist())

    # slopes of the minorant cannot exceed the asymptotic slope 0 of the obstacles
    k_min = min(hull, key=lambda k: (capped[k], -k))
    flat_tail = k_min != hull[-1]
    if flat_tail:
        hull = hull[:hull.index(k_min) + 1]

    segments: List[MinorantPiece] = []
    for i, j in zip(hull[:-1], hull[1:]):
        A = (capped[j] - capped[i]) / (y[j] - y[i])
        B = capped[i] - A * y[i]
        if j == i + 1:
            touching = capped[i] == H[i] and capped[j] == H[j]
        else:
            inner = slice(i + 1, j)
            gap = (H[inner] - (A * y[inner] + B)) / (1.0 + np.abs(H[inner]))
            touching = capped[i] == H[i] and capped[j] == H[j] and float(np.max(gap)) < contact_rtol
        kind = 'obstacle' if touching else 'linear'
        if kind == 'obstacle' and segments and segments[-1].kind == 'obstacle':
            segments[-1] = MinorantPiece('obstacle', segments[-1].y_lo, float(y[j]))
        else:
            segments.append(MinorantPiece(kind, float(y[i]), float(y[j]),
                                          A=None if kind == 'obstacle' else float(A),
                                          B=None if kind == 'obstacle' else float(B)))
    if not segments:
        segments.append(MinorantPiece('obstacle', float(y[0]), float(y[0])))

    if flat_tail:
        tail = MinorantPiece('linear', float(y[k_min]), math.inf, A=0.0, B=float(capped[k_min]))
        if segments[-1].kind == 'linear' and segments[-1].A == 0.0:
            segments[-1] = MinorantPiece('linear', segments[-1].y_lo, math.inf, A=0.0, B=float(capped[k_min]))
        else:
            segments.append(tail)
        return segments

    if segments[-1].kind != 'obstacle':
        raise MinorantError("minorant does not follow the obstacle at y_max; increase y_max")
    second = np.diff(H[-6:], 2)
    if np.any(second < -contact_rtol * (1.0 + np.abs(H[-4:]))):
        raise MinorantError("obstacle is not convex near y_max; increase y_max")
    segments[-1] = MinorantPiece('obstacle', segments[-1].y_lo, math.inf)
    return segments


def sample_domain(c: float, p: ProblemParams, n: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Log-spaced y-grid on [1, y_max]"""
    s = p.sqrt2a
    anchor = f0(p) if p.lam < p.ad else p.x_half_delta
    x_max = max(anchor, p.x_half_lambda) + c + 10.0 / s
    return np.geomspace(1.0, math.exp(2.0 * s * x_max), n)


def _refine_linear_piece(piece: MinorantPiece, H_fn: Callable[[np.ndarray], np.ndarray],
                         spacing_lo: float, spacing_hi: float) -> MinorantPiece:
    """Re-run the envelope on dense windows around both contact points of a bridge"""
    w_lo = 3.0 * spacing_lo
    w_hi = 3.0 * spacing_hi
    left = np.linspace(max(1.0, piece.y_lo - w_lo), piece.y_lo + w_lo, REFINE_SAMPLES)
    right = np.linspace(piece.y_hi - w_hi, piece.y_hi + w_hi, REFINE_SAMPLES)
    if left[-1] >= right[0]:
        return piece
    y = np.concatenate([left, right])
    h = np.minimum(H_fn(y), 0.0)
    hull = _lower_hull(y.tolist(), h.tolist())
    for i, j in zip(hull[:-1], hull[1:]):
        if i < REFINE_SAMPLES <= j:
            A = (h[j] - h[i]) / (y[j] - y[i])
            return MinorantPiece('linear', float(y[i]), float(y[j]), A=float(A), B=float(h[i] - A * y[i]))
    return piece


def numeric_one_shot(c: float, p: ProblemParams, n: int = DEFAULT_SAMPLES, refine: bool = True) -> OneShotSolution:
    """
    One-shot solution from the discrete envelope of H = Phi(h).

    Args:
        c: Fuel level (0 gives the no-fuel problem)
        p: Problem parameters
        n: Number of log-spaced samples
        refine: Sharpen bridge endpoints on dense local windows

    Returns:
        OneShotSolution with method 'numeric'
    """
    kind = 'combined' if c > 0 else 'left'
    transformed = TransformedObstacle(Obstacle(kind, p, c))
    y = sample_domain(c, p, n)
    H = transformed.at_y(y)[0]
    pieces = convex_minorant_numeric(y, H)

    if refine:
        ratio = y[1] / y[0]
        refined = []
        for piece in pieces:
            if piece.kind == 'linear' and not math.isinf(piece.y_hi):
                refined.append(_refine_linear_piece(piece, lambda v: transformed.at_y(v)[0],
                                                    piece.y_lo * (ratio - 1.0), piece.y_hi * (ratio - 1.0)))
            else:
                refined.append(piece)
        # neighbours follow the refined bridge ends
        for k, piece in enumerate(refined):
            if piece.kind != 'obstacle':
                continue
            lo = refined[k - 1].y_hi if k > 0 and refined[k - 1].kind == 'linear' else piece.y_lo
            hi = refined[k + 1].y_lo if k + 1 < len(refined) and refined[k + 1].kind == 'linear' else piece.y_hi
            refined[k] = MinorantPiece('obstacle', lo, hi)
        pieces = refined

    logger.debug(f"numeric minorant at c={c}: {len(pieces)} pieces")
    return OneShotSolution(c, p, pieces, method='numeric')


# common tangents ------------------------------------------------------------

@dataclass(frozen=True)
class TangencyPoint:
    """Common tangent touching the first obstacle at x1 and the second at x2"""
    x1: float
    x2: float
    line: TangentLine
    residual: float
    method: str


@dataclass(frozen=True)
class TangencyPair:
    y1: float
    y2: float
    x1: float
    x2: float
    slope: float
    intercept: float
    residual: float


def _newton_common_tangent(first: Callable[[float], TangentLine],
                           second: Callable[[float], TangentLine],
                           u0: float, v0: float, max_iter: int = 60) -> Optional[Tuple[float, float, float]]:
    """Damped Newton on equal slopes and equal intercepts with the analytic Jacobian"""

    def evaluate(u: float, v: float):
        a, b = first(u), second(v)
        r = np.array([a.slope - b.slope, a.intercept - b.intercept])
        scale = 1.0 + abs(a.intercept)
        return r, a, b, scale

    u, v = float(u0), float(v0)
    try:
        r, a, b, scale = evaluate(u, v)
    except (FuelControlError, ValueError, OverflowError):
        return None
    norm = float(np.max(np.abs(r)))

    for _ in range(max_iter):
        if norm < NEWTON_TOL * scale:
            return u, v, norm
        jacobian = np.array([[a.slope_x, -b.slope_x], [a.intercept_x, -b.intercept_x]])
        try:
            step = np.linalg.solve(jacobian, -r)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None

        t = 1.0
        accepted = False
        while t > 1e-8:
            un, vn = u + t * step[0], v + t * step[1]
            try:
                rn, an, bn, sn = evaluate(un, vn)
                norm_new = float(np.max(np.abs(rn)))
                if np.isfinite(norm_new) and norm_new < norm:
                    accepted = True
                    break
            except (FuelControlError, ValueError, OverflowError):
                pass
            t *= 0.5
        if not accepted:
            break
        u, v, r, a, b, scale, norm = un, vn, rn, an, bn, sn, norm_new

    if norm < NEWTON_ACCEPT * scale:
        return u, v, norm
    return None


def _left_min_intercept(sf: SpecialFunctions, m: float, x_c: float) -> Tuple[float, float]:
    """
    Lowest intercept of a line with slope m touching H_l on [1, psi(x_c)].

    Returns:
        (intercept, natural-scale contact point)
    """
    s = sf.s

    def intercept_at(z: float) -> float:
        return math.exp(z * s) * float(sf.left.value(z)) - m * math.exp(2.0 * z * s)

    candidates = [(intercept_at(0.0), 0.0), (intercept_at(x_c), x_c)]
    x_convex = min(x_c, sf.x_inflection)
    if x_convex < x_c:
        candidates.append((intercept_at(x_convex), x_convex))
    if sf.h1(0.0) < m < sf.h1(x_convex):
        z = sf.h1_inverse(m)
        candidates.append((sf.h2(z), z))
    return min(candidates)


def signed_distance_Pr(x: float, c: float, right_line: Callable[[float], TangentLine],
                       sf: SpecialFunctions) -> float:
    """Positive when the tangent to the right obstacle at psi(x) cuts H_l on [1, y_c]"""
    line = right_line(x)
    lowest, _ = _left_min_intercept(sf, line.slope, sf.x_half_delta + c / 2.0)
    return line.intercept - lowest


def right_line_factory(kind: str, p: ProblemParams, c: float) -> Callable[[float], TangentLine]:
    obstacle = Obstacle(kind, p, c)
    return lambda x: tangent_line(obstacle.jet(x), x, p.alpha)


def solve_left_right_tangency(p: ProblemParams, c: float,
                              right_line: Callable[[float], TangentLine],
                              x_lo: float, x_hi: float,
                              guess: Optional[Tuple[float, float]] = None,
                              expand: bool = False,
                              sf: Optional[SpecialFunctions] = None) -> TangencyPoint:
    """
    Common tangent of H_l and a right obstacle whose transform is convex on [psi(x_lo), inf).

    Args:
        p: Problem parameters
        c: Fuel level
        right_line: x -> tangent coefficients of the right obstacle
        x_lo: Left end of the convex part of the right obstacle
        x_hi: Upper search end (extended when expand is set)
        guess: Warm start (x1, x2) for Newton
        expand: Allow the contact point beyond x_hi
        sf: Cached special functions

    Returns:
        TangencyPoint with x1 = F-type contact, x2 = G-type contact
    """
    sf = sf or SpecialFunctions(p)
    x_c = p.x_half_delta + c / 2.0

    if guess is not None:
        found = _newton_common_tangent(sf.left_tangent, right_line, guess[0], guess[1])
        if found is not None:
            u, v, res = found
            if 0.0 < u < x_c and v >= x_lo - 1e-12 and (expand or v <= x_hi + 1e-12):
                return TangencyPoint(u, v, right_line(v), res, 'newton')
        logger.debug(f"Newton tangency rejected at c={c}; falling back to bracketed search")

    def pr(x: float) -> float:
        return signed_distance_Pr(x, c, right_line, sf)

    f_lo = pr(x_lo)
    if f_lo <= 0.0:
        raise BoundaryError(f"signed distance not positive at the left end x={x_lo} (c={c})")
    f_hi = pr(x_hi)
    if f_hi >= 0.0:
        if not expand:
            raise OutOfRangeError(f"contact point lies beyond x={x_hi} at c={c}", reason='right_end')
        step = 0.5 / sf.s
        for _ in range(200):
            x_lo, x_hi = x_hi, x_hi + step
            f_hi = pr(x_hi)
            if f_hi < 0.0:
                break
        else:
            raise BoundaryError(f"signed distance stays positive up to x={x_hi} (c={c})")

    x2 = brentq(pr, x_lo, x_hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=200)
    line = right_line(x2)
    _, z = _left_min_intercept(sf, line.slope, x_c)
    if z <= 0.0:
        raise OutOfRangeError(f"left contact point reached y = 1 at c={c}", reason='left_end')
    if z >= min(x_c, sf.x_inflection):
        raise BoundaryError(f"left contact point {z} is not on the convex part of H_l (c={c})")

    polished = _newton_common_tangent(sf.left_tangent, right_line, z, x2)
    if polished is not None and abs(polished[0] - z) < 1e-6 and abs(polished[1] - x2) < 1e-6:
        z, x2, residual = polished
    else:
        a, b = sf.left_tangent(z), right_line(x2)
        residual = max(abs(a.slope - b.slope), abs(a.intercept - b.intercept))
    return TangencyPoint(z, x2, right_line(x2), residual, 'bracket')


def _require_tangency_regime(p: ProblemParams) -> Regime:
    regime = classify(p).regime
    if regime is Regime.HIGH_COST:
        raise UnsupportedRegimeError("no waiting region exists for lambda >= alpha*delta")
    if regime is Regime.LEGACY_BELOW_STAR:
        raise UnsupportedRegimeError("tangency construction needs lambda > lambda_star")
    return regime


def solve_tangency_12(c: float, p: ProblemParams,
                      guess: Optional[Tuple[float, float]] = None) -> TangencyPair:
    """
    Common tangent of H_l at y1 and H_r1(.;c) at y2.

    Args:
        c: Fuel level in (0, c1)
        p: Problem parameters with lambda in (lambda_star, alpha*delta)
        guess: Optional natural-scale warm start (x1, x2)

    Returns:
        TangencyPair with 1 <= y1 < y_c <= y_v < y2 <= y_r
    """
    _require_tangency_regime(p)
    if c <= 0:
        raise OutOfRangeError("tangency needs c > 0")
    crit = critical_ys(c, p)
    point = solve_left_right_tangency(p, c, right_line_factory('right1', p, c),
                                      crit.x_v, crit.x_r, guess=guess)
    scale = ScaleMap(p.alpha)
    return TangencyPair(float(scale.psi(point.x1)), float(scale.psi(point.x2)),
                        point.x1, point.x2, point.line.slope, point.line.intercept, point.residual)


def solve_tangency_34(c: float, p: ProblemParams,
                      pair12: Optional[TangencyPair] = None) -> TangencyPair:
    """
    Double tangent of H_r1(.;c) at y3 and H_r2(.;c) at y4.

    Args:
        c: Small fuel level in the VLambdaShape regime
        p: Problem parameters
        pair12: The (y1, y2) solution at the same c, when already known

    Returns:
        TangencyPair with y2 < y3 < y_r <= y_m < y4
    """
    regime = _require_tangency_regime(p)
    if regime is not Regime.V_LAMBDA_SHAPE:
        raise NoSecondTangentError("a second bridge needs lambda < lambda_dagger")
    sf = SpecialFunctions(p)
    k = 2.0 * (p.x_half_lambda - f0(p))
    if c >= k:
        raise NoSecondTangentError(f"H_r has no concave part for c={c} >= k={k}")

    pair12 = pair12 or solve_tangency_12(c, p)
    crit = critical_ys(c, p)
    first = right_line_factory('right1', p, c)
    second = right_line_factory('right2', p, c)
    r1 = Obstacle('right1', p, c)

    def lowest_right1(m: float) -> Tuple[float, float]:
        s = sf.s

        def intercept_at(x: float) -> float:
            return math.exp(x * s) * float(r1.value(x)) - m * math.exp(2.0 * x * s)

        lo, hi = pair12.x2, crit.x_r
        candidates = [(intercept_at(lo), lo), (intercept_at(hi), hi)]
        if first(lo).slope < m < first(hi).slope:
            x3 = brentq(lambda x: first(x).slope - m, lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
            candidates.append((first(x3).intercept, x3))
        return min(candidates)

    def gap(x4: float) -> float:
        line = second(x4)
        return line.intercept - lowest_right1(line.slope)[0]

    x_lo = crit.x_m
    if gap(x_lo) <= 0.0:
        raise NoSecondTangentError(f"tangent at y_m does not cut H_r1 (c={c})")
    x_hi = x_lo + 0.5 / sf.s
    for _ in range(200):
        if gap(x_hi) < 0.0:
            break
        x_lo, x_hi = x_hi, x_hi + 0.5 / sf.s
    else:
        raise BoundaryError(f"double tangent not bracketed at c={c}")

    x4 = brentq(gap, x_lo, x_hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=200)
    _, x3 = lowest_right1(second(x4).slope)
    if not pair12.x2 < x3 < crit.x_r:
        raise NoSecondTangentError(f"second bridge degenerates at c={c}")

    polished = _newton_common_tangent(first, second, x3, x4)
    if polished is not None and abs(polished[0] - x3) < 1e-6 and abs(polished[1] - x4) < 1e-6:
        x3, x4, residual = polished
    else:
        a, b = first(x3), second(x4)
        residual = max(abs(a.slope - b.slope), abs(a.intercept - b.intercept))

    line = second(x4)
    scale = ScaleMap(p.alpha)
    return TangencyPair(float(scale.psi(x3)), float(scale.psi(x4)), x3, x4,
                        line.slope, line.intercept, residual)


def solve_one_shot(c: float, p: ProblemParams) -> OneShotSolution:
    """
    Analytic one-shot solution assembled from common tangents.

    Args:
        c: Fuel level
        p: Problem parameters

    Returns:
        OneShotSolution (numeric envelope outside the analytic range)
    """
    if c == 0:
        return solve_V0(p)
    regime = classify(p).regime
    if regime in (Regime.HIGH_COST, Regime.LEGACY_BELOW_STAR):
        return numeric_one_shot(c, p)

    try:
        pair12 = solve_tangency_12(c, p)
    except OutOfRangeError as e:
        logger.info(f"analytic one-shot out of range at c={c} ({str(e)}); using numeric envelope")
        return numeric_one_shot(c, p)

    pieces = [MinorantPiece('obstacle', 1.0, pair12.y1),
              MinorantPiece('linear', pair12.y1, pair12.y2, A=pair12.slope, B=pair12.intercept)]
    if regime is Regime.V_LAMBDA_SHAPE:
        try:
            pair34 = solve_tangency_34(c, p, pair12)
            pieces += [MinorantPiece('obstacle', pair12.y2, pair34.y1),
                       MinorantPiece('linear', pair34.y1, pair34.y2, A=pair34.slope, B=pair34.intercept),
                       MinorantPiece('obstacle', pair34.y2, math.inf)]
            return OneShotSolution(c, p, pieces)
        except NoSecondTangentError:
            pass
    pieces.append(MinorantPiece('obstacle', pair12.y2, math.inf))
    return OneShotSolution(c, p, pieces)


@lru_cache(maxsize=256)
def _cached_one_shot(c: float, p: ProblemParams) -> OneShotSolution:
    return solve_one_shot(c, p)


def oneshot_value(x: float, c: float, p: ProblemParams) -> float:
    """Value of the one-shot problem at (|x|, c)"""
    if c < 0:
        raise OutOfRangeError("fuel level must be nonnegative")
    if c == 0:
        return solve_V0(p).value(x)
    return _cached_one_shot(float(c), p).value(x)
