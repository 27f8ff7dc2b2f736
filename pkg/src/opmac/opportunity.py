"""Transmission-opportunity prediction from transmitter-side interference.

The measured interference ``I`` is mapped to the radius ``R`` of an
interference-free ball around the node (nearest interferer on its boundary,
the rest a Poisson field outside). The opportunistic probability is the
Rayleigh-fading success probability of the link under that picture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import SystemParams

DEFAULT_INTERFERENCE_FLOOR = 1e-12


@dataclass(frozen=True)
class OpportunityEstimate:
    measured_interference: float
    ball_radius: float
    op: float


def _ball_residual(R, I, params: SystemParams):
    return I * R**params.alpha - 4 * math.pi * params.lam / (params.alpha - 2) * R**2 - 1


def _radius_alpha4(I, lam):
    pl = math.pi * lam
    return np.sqrt((pl + np.sqrt(I + pl * pl)) / I)


def _radius_newton(I: float, params: SystemParams, tol: float = 1e-13, max_iter: int = 200) -> float:
    a = params.alpha
    c = 4 * math.pi * params.lam / (a - 2)

    def f(R):
        return I * R**a - c * R**2 - 1

    def fprime(R):
        return a * I * R ** (a - 1) - 2 * c * R

    # f(0) = -1 and f has a single sign change on (0, inf)
    lo, hi = 0.0, max(I ** (-1.0 / a), 1.0)
    while f(hi) <= 0:
        lo, hi = hi, 2 * hi
    R = hi
    for _ in range(max_iter):
        fR = f(R)
        if fR > 0:
            hi = R
        else:
            lo = R
        if abs(fR) <= tol * max(1.0, c * R * R):
            break
        step = fR / fprime(R) if fprime(R) > 0 else math.inf
        R_new = R - step
        if not lo < R_new < hi:
            R_new = 0.5 * (lo + hi)
        if R_new == R:
            break
        R = R_new
    return _polish(R, I, a, params.lam)


_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def _polish(R: float, I: float, a: float, lam: float) -> float:
    # one extended-precision Newton step, then keep the best neighbouring double
    ld = np.longdouble
    Rl, Il, al = ld(R), ld(I), ld(a)
    cl = 4 * _PI_LD * ld(lam) / (al - 2)

    def f(x):
        return Il * x**al - cl * x * x - 1

    Rl = Rl - f(Rl) / (al * Il * Rl ** (al - 1) - 2 * cl * Rl)
    best = float(Rl)
    cands = [best, np.nextafter(best, 0.0), np.nextafter(best, math.inf)]
    return float(min(cands, key=lambda x: abs(f(ld(x)))))


def empty_ball_radius(I, params: SystemParams):
    """Radius of the empty ball consistent with measured interference ``I``.

    Closed form for alpha = 4, safeguarded Newton otherwise. Accepts arrays.
    """
    I_arr = np.asarray(I, dtype=float)
    if np.any(I_arr <= 0):
        raise ValueError("measured interference must be positive; substitute the interference floor")
    if params.alpha == 4:
        R = _radius_alpha4(I_arr, params.lam)
    else:
        R = np.vectorize(lambda x: _radius_newton(float(x), params), otypes=[float])(I_arr)
    return float(R) if R.ndim == 0 else R


def _far_field_integral(R: float, params: SystemParams) -> float:
    # int_R^inf  theta d^a r / (r^a + theta d^a) dr
    k = params.theta * params.d**params.alpha
    a = params.alpha
    val, _ = integrate.quad(lambda r: k * r / (r**a + k), R, math.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def opportunistic_probability(I, params: SystemParams, duplex_active: bool = False):
    """Conditional success probability of a link given transmitter-side interference ``I``.

    ``duplex_active`` applies the residual self-interference factor of a
    receiver that is itself transmitting.
    """
    R = np.asarray(empty_ball_radius(I, params), dtype=float)
    a, theta, d, lam = params.alpha, params.theta, params.d, params.lam
    k = theta * d**a
    nearest = 1.0 / (1.0 + k / R**a)
    if a == 4:
        sq = math.sqrt(theta) * d * d
        integral = 0.5 * sq * (math.pi / 2 - np.arctan(R * R / sq))
    else:
        integral = np.vectorize(lambda r: _far_field_integral(float(r), params), otypes=[float])(R)
    op = nearest * np.exp(-2 * math.pi * (2 * lam) * integral)
    if duplex_active:
        op = op * params.fd_factor
    op = np.clip(op, 0.0, 1.0)
    return float(op) if op.ndim == 0 else op


def estimate(I: float, params: SystemParams, duplex_active: bool = False,
             floor: float = DEFAULT_INTERFERENCE_FLOOR) -> OpportunityEstimate:
    I_eff = max(float(I), floor)
    return OpportunityEstimate(
        measured_interference=I_eff,
        ball_radius=empty_ball_radius(I_eff, params),
        op=opportunistic_probability(I_eff, params, duplex_active),
    )
