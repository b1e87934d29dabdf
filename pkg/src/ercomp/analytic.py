"""Closed-form limit quantities for the sparse regime: the giant-component
fraction, its CLT scale, the Borel size law at and below criticality, and the
low-order susceptibility corrections.

Everything here is plain double-precision float; the exact/extended machinery
lives in the exact module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .precision import DomainError

_INV_E = math.exp(-1.0)


def phi(t: float, x: float) -> float:
    """Rate function -x*t - ln(1-x) on [0, 1); negative between 0 and the
    positive root, positive past it (for t > 1)."""
    if not 0 <= x < 1:
        raise DomainError("x must lie in [0, 1)")
    return -x * t - math.log1p(-x)


def theta(t: float) -> float:
    """Positive root of phi(t, .) in (0, 1): the surviving fraction for t > 1.

    Bisection from the bracket [1 - 1/t, 1 - exp(-t)] (phi is negative at the
    left end, t*exp(-t) > 0 at the right), then Newton polish to residual
    below 1e-14.
    """
    if not t > 1:
        raise DomainError("t must exceed 1")
    lo = 1.0 - 1.0 / t  # phi's minimizer; strictly inside the dip
    hi = 1.0 - math.exp(-t)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if phi(t, mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    x = 0.5 * (lo + hi)
    for _ in range(4):
        slope = -t + 1.0 / (1.0 - x)  # phi_x; positive at the root
        step = phi(t, x) / slope
        x -= step
        if not 0.0 < x < 1.0:
            x = min(max(x, 1e-17), 1.0 - 1e-17)
    return x


def lambert_w0(x: float) -> float:
    """Principal Lambert branch on [-1/e, 0]: w*exp(w) = x with w in [-1, 0].

    Seeded by the branch-point series near -1/e and by w = x near 0, then
    Halley iterations; residual |w*exp(w) - x| <= 1e-14 on the whole range.
    """
    if not -_INV_E - 1e-15 <= x <= 0:
        raise DomainError("x must lie in [-1/e, 0]")
    if x == 0:
        return 0.0
    rad = 2.0 * (math.e * x + 1.0)
    if rad < 0:  # only from the 1e-15 slack at the branch point
        rad = 0.0
    if x < -0.25:
        s = math.sqrt(rad)
        w = -1.0 + s * (1.0 + s * (-1.0 / 3.0 + s * (11.0 / 72.0)))
    else:
        w = x
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-15:
            break
        wp1 = w + 1.0
        if wp1 <= 1e-12:
            # Halley denominator degenerates at the branch point; the series
            # seed is already within 1e-15 residual there
            break
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    if w < -1.0:
        w = -1.0
    elif w > 0.0:
        w = 0.0
    return w


def sigma(t: float) -> float:
    """CLT scale for the giant component: largest size ~ theta*n + sigma*sqrt(n)*Z."""
    th = theta(t)
    slope = -t + 1.0 / (1.0 - th)
    return math.sqrt(th) / (slope * math.sqrt(1.0 - th))


@dataclass(frozen=True)
class SupercriticalConstants:
    """The t > 1 constants bundled: root, rate-function slope there, CLT scale."""

    t: float
    theta: float
    phi_slope: float
    sigma: float


def supercritical_constants(t: float) -> SupercriticalConstants:
    th = theta(t)
    slope = -t + 1.0 / (1.0 - th)
    return SupercriticalConstants(t, th, slope, math.sqrt(th) / (slope * math.sqrt(1.0 - th)))


def borel_pmf(t: float, k: int) -> float:
    """Limiting component-size law P[k] = exp(-t*k) (t*k)^(k-1) / k!  (t <= 1:
    proper; t > 1: defective with mass 1 - theta)."""
    if not t > 0:
        raise DomainError("t must be positive")
    if not isinstance(k, int) or k < 1:
        raise DomainError("k must be an integer >= 1")
    if k == 1:
        return math.exp(-t)
    return math.exp(-t * k + (k - 1) * math.log(t * k) - math.lgamma(k + 1))


def borel_gf(t: float, z: float) -> float:
    """Generating function G(z) = sum_k borel_pmf(t,k) z^k, via the principal
    Lambert branch: G = -W0(-t*z*exp(-t)) / t.  Satisfies G = z*exp(t*(G-1))."""
    if not t > 0:
        raise DomainError("t must be positive")
    if not 0 <= z <= 1:
        raise DomainError("z must lie in [0, 1]")
    arg = -z * t * math.exp(-t)
    if arg < -_INV_E:
        arg = -_INV_E  # only roundoff can push past the branch point
    return -lambert_w0(arg) / t


def susceptibility_expansion(t: float, n: int, order: int) -> float:
    """Mean component size below criticality with the first finite-n correction.

    order 0: 1/(1-t); order 1 adds ((t^2/2 - t) / (1-t)^4) / n.
    """
    if not 0 <= t < 1:
        raise DomainError("t must lie in [0, 1)")
    if not isinstance(n, int) or n < 1:
        raise DomainError("n must be an integer >= 1")
    if order not in (0, 1):
        raise DomainError("order must be 0 or 1")
    base = 1.0 / (1.0 - t)
    if order == 0:
        return base
    corr = (0.5 * t * t - t) / (1.0 - t) ** 4
    return base + corr / n


def second_moment_leading(t: float) -> float:
    """Leading term of E[|C|^2] below criticality: 1/(1-t)^3."""
    if not 0 <= t < 1:
        raise DomainError("t must lie in [0, 1)")
    return 1.0 / (1.0 - t) ** 3
