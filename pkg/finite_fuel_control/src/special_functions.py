#!/usr/bin/env python3
"""
Tangent-line functions of the transformed obstacles and the boundary
functions q, q-tilde, chi and L built from them.
"""

import os
import sys
import math

from scipy.optimize import brentq

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

from model import ProblemParams, DomainError, BoundaryError, rho, ROOT_XTOL, ROOT_RTOL
from transform import Obstacle, TangentLine, tangent_line

logger = setup_solver_logging('special_functions')


class SpecialFunctions:
    """
    Bound special functions for one parameter set (lambda < alpha*delta).

    h1/h2 are the slope/intercept of the tangent to H_l at psi(x), Htilde3/4 the
    same for H_r1(.;c), Hcal3/4 for H_r2(.;c); h3/h4 close the ODE identities
    (d/dx + d/dc) Htilde3 = h3 - sqrt(2 alpha) Htilde3 and
    (d/dx + d/dc) Htilde4 = sqrt(2 alpha) Htilde4 - h4.
    """

    def __init__(self, p: ProblemParams):
        if p.lam >= p.ad:
            raise DomainError("special functions need lambda < alpha*delta")
        self.p = p
        self.s = p.sqrt2a
        self.a = p.x_half_lambda
        self.x_half_delta = p.x_half_delta
        self.kappa = (p.ad - p.lam) / (2.0 * p.alpha)
        self.x_inflection = math.sqrt(p.delta / (p.ad - p.lam))
        self.left = Obstacle('left', p)

    # left tangent ---------------------------------------------------------

    def h1(self, x: float) -> float:
        return self.kappa * math.exp(-x * self.s) * rho(x, self.p)

    def h2(self, x: float) -> float:
        return self.kappa * math.exp(x * self.s) * (rho(x, self.p) - 4.0 * x / self.s)

    def left_tangent(self, x: float) -> TangentLine:
        return tangent_line(self.left.jet(x), x, self.p.alpha)

    def dh1(self, x: float) -> float:
        return self.left_tangent(x).slope_x

    def dh2(self, x: float) -> float:
        return self.left_tangent(x).intercept_x

    def h1_inverse(self, m: float) -> float:
        """
        Point z in [0, x_inflection] where H_l has tangent slope m.

        Args:
            m: Slope in the transformed scale

        Returns:
            z with h1(z) = m
        """
        lo, hi = 0.0, self.x_inflection
        f_lo, f_hi = self.h1(lo) - m, self.h1(hi) - m
        if f_lo > 0 or f_hi < 0:
            raise DomainError(f"slope {m} outside the range of h1 on [0, {hi}]")
        if f_lo == 0:
            return lo
        return brentq(lambda z: self.h1(z) - m, lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)

    # right tangents -------------------------------------------------------

    def h3(self, x: float) -> float:
        p = self.p
        return (p.lam / p.alpha) * (self.a - x - 1.0 / self.s) * math.exp(-x * self.s)

    def h4(self, x: float) -> float:
        p = self.p
        return (p.lam / p.alpha) * (x - self.a - 1.0 / self.s) * math.exp(x * self.s)

    def dh3(self, x: float) -> float:
        p = self.p
        return -(p.lam * self.s / p.alpha) * (self.a - x) * math.exp(-x * self.s)

    def dh4(self, x: float) -> float:
        p = self.p
        return (p.lam * self.s / p.alpha) * (x - self.a) * math.exp(x * self.s)

    def Htilde(self, x: float, c: float) -> TangentLine:
        return tangent_line(Obstacle('right1', self.p, c).jet(x), x, self.p.alpha)

    def Htilde3(self, x: float, c: float) -> float:
        return self.Htilde(x, c).slope

    def Htilde4(self, x: float, c: float) -> float:
        return self.Htilde(x, c).intercept

    def Hcal(self, x: float, c: float) -> TangentLine:
        return tangent_line(Obstacle('right2', self.p, c).jet(x), x, self.p.alpha)

    # q, q-tilde, chi ------------------------------------------------------

    def q(self, x: float, z: float) -> float:
        e2z = math.exp(2.0 * z * self.s)
        return (self.s * (self.h2(z) - self.h1(z) * e2z)
                + self.h3(x) * e2z - self.h4(x))

    def q_diag(self, z: float) -> float:
        """q(z;z) in closed form"""
        return math.exp(z * self.s) * (1.0 - 2.0 * self.p.delta * z)

    def q_x(self, x: float, z: float) -> float:
        p = self.p
        return ((p.lam * self.s / p.alpha) * (self.a - x) * math.exp(x * self.s)
                * (1.0 - math.exp(2.0 * (z - x) * self.s)))

    def q_z(self, x: float, z: float) -> float:
        e2z = math.exp(2.0 * z * self.s)
        return 2.0 * self.s * e2z * (self.h3(x) - self.dh1(z) - self.s * self.h1(z))

    def qtilde(self, x: float, z: float) -> float:
        return self.q(x, z) - self.q_diag(z)

    def qtilde_z(self, x: float, z: float) -> float:
        diag_z = math.exp(z * self.s) * (self.s * (1.0 - 2.0 * self.p.delta * z) - 2.0 * self.p.delta)
        return self.q_z(x, z) - diag_z

    def chi(self, z: float) -> float:
        """
        Root of q-tilde(.;z) above alpha/(2 lambda); identity for z >= alpha/(2 lambda).

        Args:
            z: Point in (1/(2 delta), infinity)

        Returns:
            chi(z)
        """
        if z <= self.x_half_delta:
            raise DomainError(f"chi is defined for z > 1/(2 delta), got {z}")
        if z >= self.a:
            return z

        lo, hi = self.a, self.a + 1.0 / self.s
        f_lo = self.qtilde(lo, z)
        if f_lo <= 0.0:
            # z is within rounding of alpha/(2 lambda)
            return lo
        f_hi = self.qtilde(hi, z)
        if f_hi >= 0.0:
            raise BoundaryError(f"q-tilde(.;{z}) has no sign change on [{lo}, {hi}]")
        return brentq(lambda x: self.qtilde(x, z), lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)

    def dchi(self, z: float) -> float:
        if z >= self.a:
            return 1.0
        x = self.chi(z)
        slope = self.q_x(x, z)
        if slope == 0.0:
            raise BoundaryError(f"chi'({z}) is singular")
        return -self.qtilde_z(x, z) / slope

    def reflecting_root(self, z: float) -> float:
        """Root of q(.;z) in (alpha/(2 lambda), alpha/(2 lambda) + 1/sqrt(2 alpha)) for z < 1/(2 delta)"""
        lo, hi = self.a, self.a + 1.0 / self.s
        f_lo, f_hi = self.q(lo, z), self.q(hi, z)
        if f_lo <= 0.0 or f_hi >= 0.0:
            raise BoundaryError(f"q(.;{z}) has no sign change on [{lo}, {hi}]")
        return brentq(lambda x: self.q(x, z), lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)

    # L ------------------------------------------------------------------

    def L(self, x: float, c: float) -> float:
        line = self.Htilde(x, c)
        z = self.h1_inverse(line.slope)
        return line.intercept - self.h2(z)

    def L_x(self, x: float, c: float) -> float:
        line = self.Htilde(x, c)
        z = self.h1_inverse(line.slope)
        return (math.exp(2.0 * z * self.s) - math.exp(2.0 * x * self.s)) * line.slope_x
