"""Proportionally fair optimal transmission probability.

The exact optimum solves ``1/p = RHS(p)``; the right-hand side has a
self-interference term, an empty-ball term and a far-field integral. Three
evaluations of the far-field term are offered:

* ``NUMERIC_INTEGRAL``: adaptive quadrature, any alpha > 2.
* ``DERIVED_ARCCOT``: the exact alpha = 4 reduction, ``pi/2 - arctan(.)``.
* ``PAPER_EQ6``: an alpha = 4 form with ``arctan(.)`` in place of its
  complement; kept for comparison, it is not the exact reduction.

A curve-fitted closed form (quadratic in p) approximates the optimum at alpha = 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from .model import SystemParams
from .opportunity import empty_ball_radius

P_UPPER = 1.0 - 1e-9
MAX_BISECTION = 200


class Variant(str, Enum):
    PAPER_EQ6 = "PAPER_EQ6"
    DERIVED_ARCCOT = "DERIVED_ARCCOT"
    NUMERIC_INTEGRAL = "NUMERIC_INTEGRAL"


class Regime(str, Enum):
    SMALL_X = "SMALL_X"
    LARGE_X = "LARGE_X"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverResult:
    p_star: float
    residual: float
    clamped: bool
    variant: Variant
    ball_radius: float = math.nan
    iterations: int = 0


@dataclass(frozen=True)
class QuadraticCoefficients:
    c1: float
    c2: float
    c3: float
    regime: Regime
    x: float

    @property
    def discriminant(self) -> float:
        return self.c2**2 - 4 * self.c1 * self.c3


def _effective_beta(params: SystemParams) -> float:
    # half duplex: receivers never transmit, so no self-interference term
    return params.beta if params.full_duplex else 0.0


def _far_field_numeric(p, R: float, params: SystemParams):
    a, theta, d = params.alpha, params.theta, params.d
    lo = R / d
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = 1.0 - p

    # s = lo / t maps [lo, inf) onto (0, 1]
    def integrand(t):
        if t == 0.0:
            return np.zeros_like(q)
        s = lo / t
        return s / (q + s**a / theta) * lo / (t * t)

    val, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=2000)
    return 4 * math.pi * params.lam * d * d * val


def fixed_point_rhs(p, R: float, params: SystemParams, variant: Variant = Variant.NUMERIC_INTEGRAL):
    """Right-hand side of the optimality condition ``1/p = RHS(p)``. Vectorised over ``p``."""
    variant = Variant(variant)
    if variant is not Variant.NUMERIC_INTEGRAL and params.alpha != 4:
        raise ValueError(f"{variant.value} needs alpha = 4, got alpha = {params.alpha}")
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0) or np.any(p_arr > 1):
        raise ValueError("p must lie in (0, 1]")
    if variant is not Variant.NUMERIC_INTEGRAL and np.any(p_arr >= 1):
        raise ValueError(f"{variant.value} is singular at p = 1; use NUMERIC_INTEGRAL for the limit")
    if R <= 0:
        raise ValueError("R must be positive")

    theta, d, lam = params.theta, params.d, params.lam
    a = params.alpha
    e = math.exp(-theta * d**a * _effective_beta(params)) - 1.0
    self_term = -e / (e * p_arr + 1.0)
    ball_term = 1.0 / (1.0 + R**a / (theta * d**a) - p_arr)

    if lam == 0:
        far = np.zeros_like(p_arr)
    elif variant is Variant.NUMERIC_INTEGRAL:
        far = _far_field_numeric(p_arr, R, params).reshape(p_arr.shape)
    else:
        q = 1.0 - p_arr
        u = (R / d) ** 2 / np.sqrt(theta * q)
        angle = np.arctan(u) if variant is Variant.PAPER_EQ6 else math.pi / 2 - np.arctan(u)
        far = 2 * math.pi * lam * d * d * math.sqrt(theta) / np.sqrt(q) * angle

    out = self_term + ball_term + far
    return float(out) if out.ndim == 0 else out


def _g(p, R, params, variant):
    return fixed_point_rhs(p, R, params, variant) - 1.0 / np.asarray(p, dtype=float)


def solve_for_radius(R: float, params: SystemParams, variant: Variant = Variant.NUMERIC_INTEGRAL,
                     tol: float = 1e-9) -> SolverResult:
    variant = Variant(variant)
    if tol <= 0:
        raise ValueError("tol must be positive")
    g_hi = _g(P_UPPER, R, params, variant)
    if g_hi < 0:
        residual = abs(g_hi)
        return SolverResult(1.0, residual, True, variant, R, 0)
    lo, hi = 0.0, P_UPPER
    for it in range(1, MAX_BISECTION + 1):
        mid = 0.5 * (lo + hi)
        gm = _g(mid, R, params, variant)
        if abs(gm) <= tol:
            return SolverResult(mid, abs(gm), False, variant, R, it)
        if gm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    raise SolverError(f"bisection did not reach tol={tol} (last |g|={abs(gm):.3e}, p~{mid:.17g})")


def solve_optimal_p(I: float, params: SystemParams, variant: Variant = Variant.NUMERIC_INTEGRAL,
                    tol: float = 1e-9) -> SolverResult:
    """Optimal transmission probability for measured interference ``I`` (clamped at 1)."""
    return solve_for_radius(empty_ball_radius(I, params), params, variant, tol)


def solve_optimal_p_many(I, params: SystemParams, variant: Variant = Variant.DERIVED_ARCCOT,
                         iterations: int = 60) -> np.ndarray:
    """Vectorised bisection over an array of interference values (alpha = 4 analytic variants).

    Used in the slot loop where one optimum per node per slot is needed.
    """
    variant = Variant(variant)
    if variant is Variant.NUMERIC_INTEGRAL:
        I = np.asarray(I, dtype=float)
        return np.array([solve_optimal_p(x, params, variant).p_star for x in I.ravel()]).reshape(I.shape)
    if params.alpha != 4:
        raise ValueError(f"{variant.value} needs alpha = 4")
    R = np.asarray(empty_ball_radius(I, params), dtype=float)
    theta, d, lam = params.theta, params.d, params.lam
    e = math.exp(-theta * d**4 * _effective_beta(params)) - 1.0
    ratio = R**4 / (theta * d**4)
    u0 = (R / d) ** 2
    coef = 2 * math.pi * lam * d * d * math.sqrt(theta)

    def g(p):
        q = 1.0 - p
        u = u0 / np.sqrt(theta * q)
        angle = np.arctan(u) if variant is Variant.PAPER_EQ6 else math.pi / 2 - np.arctan(u)
        return -e / (e * p + 1.0) + 1.0 / (1.0 + ratio - p) + coef / np.sqrt(q) * angle - 1.0 / p

    p_hi = np.full(R.shape, P_UPPER)
    clamp = g(p_hi) < 0
    lo = np.zeros(R.shape)
    hi = p_hi.copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        neg = g(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return np.where(clamp, 1.0, 0.5 * (lo + hi))


def arctan_approx(x):
    """Piecewise rational/constant stand-in for arctan on x >= 0."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("arctan_approx is defined for x >= 0")
    out = np.where(x_arr <= 10, (1.632 * x_arr - 0.1037) / (x_arr + 0.8967), math.pi / 2)
    return float(out) if out.ndim == 0 else out


def split_variable(R: float, params: SystemParams) -> float:
    return (R / params.d) ** 2 / math.sqrt(params.theta / 2)


def quadratic_coefficients(I: float, params: SystemParams) -> QuadraticCoefficients:
    """Fitted coefficients of ``c1 p^2 + c2 p + c3 = 0`` (alpha = 4 only)."""
    if params.alpha != 4:
        raise ValueError(f"the closed form needs alpha = 4, got alpha = {params.alpha}")
    if I <= 0:
        raise ValueError("measured interference must be positive")
    lam, theta, d, beta = params.lam, params.theta, params.d, _effective_beta(params)
    x = split_variable(empty_ball_radius(I, params), params)
    ex = math.exp(-theta * beta * d**4)
    if x <= 10:
        c1 = ((10.4 * lam**0.66 + 1.15) * (3.5 * theta**0.5 + 1.1) * (0.5 * d**2 - 0.7)
              * (4.5e-4 * I**-1.75 - 0.12) * (-28.84 * ex + 29.85))
        c2 = (3.8e-4 * I**-1.75 * (1.11e3 * lam**2 + 3) * (0.3 * theta**0.5 + 2.3)
              * (0.14 * d**2.5 + 6) * (-0.129 * ex + 1.129))
        c3 = -((lam**1.63 + 0.014) * (0.7 / theta + 0.5) * (10 * d**-4 + 0.4)
               * (0.9 * I**-1.763 + 49) * (0.02 * ex + 0.98))
        regime = Regime.SMALL_X
    else:
        c1 = ((273 * lam**1.66 + 2) * (1.1 / theta - 5) * (2.5 * d**-4 - 0.7)
              * (1.2e-5 * I**-2.75 - 0.4) * (7.96 * ex - 6.958))
        c2 = (1e-4 * I**-2.75 * (3.8e3 * lam**2.66 + 1.4) * (2.7 / theta + 3.5)
              * (34 * d**-4 + 3) * (0.5261 * ex + 1.526))
        c3 = -((0.9 * lam**1.63 + 0.013) * (0.7 / theta + 0.5) * (17 * d**-4 + 0.7)
               * (0.5 * I**-1.763 + 30) * (-0.046 * ex + 1.051))
        regime = Regime.LARGE_X
    return QuadraticCoefficients(c1, c2, c3, regime, x)


def closed_form_p(I: float, params: SystemParams) -> float:
    """Approximate optimum from the fitted quadratic, clamped at 1."""
    co = quadratic_coefficients(I, params)
    disc = co.discriminant
    if disc < 0:
        raise SolverError(f"negative discriminant {disc:.6g} ({co.regime.value}, x={co.x:.4g})")
    root = (-co.c2 + math.sqrt(disc)) / (2 * co.c1)
    return min(root, 1.0)
