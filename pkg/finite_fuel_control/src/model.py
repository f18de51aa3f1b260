#!/usr/bin/env python3
"""
Problem parameters, regime constants and regime classification for the
finite-fuel control problem with discretionary stopping.
"""

import os
import sys
import json
import math
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.optimize import brentq

# Import logging filter from root directory
sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

logger = setup_solver_logging('model')

ROOT_XTOL = 1e-14
BOUNDARY_RTOL = 1e-12
ROOT_RTOL = 4 * float(np.finfo(float).eps)


class FuelControlError(Exception):
    """Base class for all solver errors"""


class ParameterError(FuelControlError, ValueError):
    """Invalid problem parameters"""


class DomainError(FuelControlError, ValueError):
    """A quantity was requested outside the parameter range where it exists"""


class UnsupportedRegimeError(FuelControlError):
    """Full boundary solve requested for a regime the solver does not cover"""


class OutOfRangeError(FuelControlError):
    """A fuel level lies outside the range of a construction"""

    def __init__(self, message: str, reason: str = 'range'):
        super().__init__(message)
        # 'left_end': contact reached y = 1, 'right_end': contact passed the search end
        self.reason = reason


class NoSecondTangentError(FuelControlError):
    """The minorant has a single linear piece, so no (y3, y4) pair exists"""


class BoundaryError(FuelControlError):
    """Boundary construction failed or violated a structural bound"""


class ConvergenceError(FuelControlError):
    """An iterative solver did not converge"""


class MinorantError(FuelControlError):
    """The numeric convex minorant could not be assembled"""


class Regime(Enum):
    HIGH_COST = 'HighCost'
    V_SHAPE = 'VShape'
    V_LAMBDA_SHAPE = 'VLambdaShape'
    LEGACY_BELOW_STAR = 'LegacyBelowStar'


@dataclass(frozen=True)
class ProblemParams:
    """Running-cost coefficient lam, discount rate alpha, terminal-cost coefficient delta"""
    lam: float
    alpha: float
    delta: float

    def __post_init__(self):
        for name in ('lam', 'alpha', 'delta'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParameterError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be a positive finite number, got {value}")

    @property
    def sqrt2a(self) -> float:
        return math.sqrt(2.0 * self.alpha)

    @property
    def ad(self) -> float:
        return self.alpha * self.delta

    @property
    def x_half_delta(self) -> float:
        return 1.0 / (2.0 * self.delta)

    @property
    def x_half_lambda(self) -> float:
        return self.alpha / (2.0 * self.lam)

    def with_lambda(self, lam: float) -> 'ProblemParams':
        return ProblemParams(lam=lam, alpha=self.alpha, delta=self.delta)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProblemParams':
        """
        Build parameters from a JSON-style record.

        Args:
            data: Mapping with keys "lambda", "alpha", "delta"

        Returns:
            ProblemParams instance
        """
        missing = [key for key in ('lambda', 'alpha', 'delta') if key not in data]
        if missing:
            raise ParameterError(f"Missing parameter keys: {', '.join(missing)}")
        try:
            return cls(lam=float(data['lambda']),
                       alpha=float(data['alpha']),
                       delta=float(data['delta']))
        except (TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"Parameters must be numbers: {str(e)}")

    @classmethod
    def from_json(cls, text: str) -> 'ProblemParams':
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise ParameterError(f"Invalid parameter JSON: {str(e)}")

    def to_dict(self) -> Dict[str, float]:
        return {'lambda': self.lam, 'alpha': self.alpha, 'delta': self.delta}


def rho(x: float, p: ProblemParams) -> float:
    """x^2 + 2x/sqrt(2 alpha) - (lambda/alpha)/(alpha delta - lambda)"""
    gap = p.ad - p.lam
    if gap == 0:
        raise DomainError("rho is undefined for lambda = alpha*delta")
    return x * x + 2.0 * x / p.sqrt2a - (p.lam / p.alpha) / gap


def _f0_raw(lam: float, alpha: float, delta: float) -> float:
    ad = alpha * delta
    return (math.sqrt((ad + lam) / (ad - lam)) - 1.0) / math.sqrt(2.0 * alpha)


def f0(p: ProblemParams) -> float:
    """
    Free boundary of the problem without fuel.

    Args:
        p: Problem parameters with lambda < alpha*delta

    Returns:
        Positive root of rho
    """
    if p.lam >= p.ad:
        raise DomainError(f"f0 is undefined for lambda >= alpha*delta ({p.lam} >= {p.ad})")
    return _f0_raw(p.lam, p.alpha, p.delta)


def lambda_star(alpha: float, delta: float) -> float:
    """The value of lambda at which f0 equals 1/(2 delta)"""
    if alpha <= 0 or delta <= 0:
        raise ParameterError("alpha and delta must be positive")
    return alpha * delta / (1.0 + (delta / alpha) / (1.0 / (4.0 * delta) + 1.0 / math.sqrt(2.0 * alpha)))


def lambda_dagger(alpha: float, delta: float) -> float:
    """
    Unique lambda in (lambda_star, alpha*delta) with f0(lambda) = alpha/(2 lambda).

    Args:
        alpha: Discount rate
        delta: Terminal-cost coefficient

    Returns:
        The threshold separating the two shapes of the waiting region
    """
    if alpha <= 0 or delta <= 0:
        raise ParameterError("alpha and delta must be positive")
    ad = alpha * delta
    lo = lambda_star(alpha, delta)

    def residual(lam: float) -> float:
        return 2.0 * lam * _f0_raw(lam, alpha, delta) - alpha

    hi = ad * (1.0 - 1e-9)
    # residual(lo) = (lo - ad)/delta < 0 and residual -> +inf as lambda -> ad
    assert residual(lo) < 0, "lambda_dagger bracket: lower end must be negative"
    assert residual(hi) > 0, "lambda_dagger bracket: upper end must be positive"
    return brentq(residual, lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=500)


@dataclass(frozen=True)
class Classification:
    regime: Regime
    chain: str
    boundary_warning: bool = False


def classify(p: ProblemParams) -> Classification:
    """
    Classify parameters into the cost regimes.

    Args:
        p: Problem parameters

    Returns:
        Classification with the realized inequality chain
    """
    if p.lam >= p.ad:
        return Classification(Regime.HIGH_COST, 'lambda >= alpha*delta',
                              boundary_warning=math.isclose(p.lam, p.ad, rel_tol=BOUNDARY_RTOL))

    l_star = lambda_star(p.alpha, p.delta)
    l_dagger = lambda_dagger(p.alpha, p.delta)
    near_star = math.isclose(p.lam, l_star, rel_tol=BOUNDARY_RTOL)
    near_dagger = math.isclose(p.lam, l_dagger, rel_tol=BOUNDARY_RTOL)

    if near_dagger or p.lam >= l_dagger:
        regime = Regime.V_SHAPE
        chain = '1/(2delta) < alpha/(2lambda) <= f0'
    elif p.lam > l_star and not near_star:
        regime = Regime.V_LAMBDA_SHAPE
        chain = '1/(2delta) < f0 < alpha/(2lambda)'
    else:
        regime = Regime.LEGACY_BELOW_STAR
        chain = 'f0 <= 1/(2delta)'

    warning = near_star or near_dagger
    if warning:
        logger.warning(f"lambda={p.lam} lies on a regime boundary; geometry is degenerate")
    return Classification(regime, chain, boundary_warning=warning)


@dataclass(frozen=True)
class RegimeConstants:
    regime: Regime
    f0: Optional[float]
    lambda_star: float
    lambda_dagger: float
    x_half_delta: float
    x_half_lambda: float
    K: Optional[float]
    k: Optional[float]
    k_bar: float
    B0: Optional[float]

    def to_record(self) -> Dict[str, Any]:
        """Flat JSON record; undefined constants become null"""
        record = asdict(self)
        record['regime'] = self.regime.value
        return record


def B0_coefficient(p: ProblemParams, f0_value: Optional[float] = None) -> float:
    """Coefficient of exp(-x sqrt(2 alpha)) in the no-fuel value beyond f0"""
    fz = f0(p) if f0_value is None else f0_value
    s = p.sqrt2a
    return -(2.0 * fz / (p.alpha * s)) * (p.ad - p.lam) * math.exp(fz * s)


def compute_constants(p: ProblemParams) -> RegimeConstants:
    """
    Compute every regime constant for the parameters.

    Args:
        p: Problem parameters

    Returns:
        RegimeConstants (f0, K, k, B0 are None in the HighCost regime)
    """
    classification = classify(p)
    l_star = lambda_star(p.alpha, p.delta)
    l_dagger = lambda_dagger(p.alpha, p.delta)
    k_bar = p.x_half_lambda - p.x_half_delta

    if classification.regime is Regime.HIGH_COST:
        return RegimeConstants(classification.regime, None, l_star, l_dagger,
                               p.x_half_delta, p.x_half_lambda, None, None, k_bar, None)

    fz = f0(p)
    K = 2.0 * (math.sqrt(p.delta / (p.ad - p.lam)) - p.x_half_delta)
    k = 2.0 * (p.x_half_lambda - fz)
    return RegimeConstants(classification.regime, fz, l_star, l_dagger,
                           p.x_half_delta, p.x_half_lambda, K, k, k_bar,
                           B0_coefficient(p, fz))
