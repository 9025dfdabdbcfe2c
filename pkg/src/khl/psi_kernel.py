"""
The kernel ``psi_s(t) = |s + sqrt(t)|^p + |s - sqrt(t)|^p`` and its second derivative.

Every convexity argument in the stability proofs runs through ``psi_s''``. This
module evaluates it in closed form, through its integral representation, and
through the regime-dependent lower bounds used by the exchange and T-step lemmas.
"""

from __future__ import annotations

import math
from enum import Enum

from scipy import integrate

from khl.errors import DomainError, QuadratureNotConverged


class PsiRegime(Enum):
    P3 = "p = 3"
    P3TO4 = "3 < p < 4"
    P4 = "p = 4"
    PGT4 = "p > 4"

    def __str__(self):
        return self.name

    @classmethod
    def from_p(cls, p: float) -> "PsiRegime":
        if p < 3:
            raise DomainError(f"psi regimes start at p = 3, got {p}")
        if p == 3:
            return cls.P3
        if p < 4:
            return cls.P3TO4
        if p == 4:
            return cls.P4
        return cls.PGT4


def _signed_power(x: float, q: float) -> float:
    """``|x|^q * x``."""
    return abs(x) ** q * x


def psi(s: float, t: float, p: float) -> float:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    root = math.sqrt(t)
    return abs(s + root) ** p + abs(s - root) ** p


def psi_second(s: float, t: float, p: float) -> float:
    """Closed form of ``d^2/dt^2 psi_s(t)``."""
    if t <= 0:
        raise DomainError(f"psi'' needs t > 0, got {t}")
    regime = PsiRegime.from_p(p)
    if regime is PsiRegime.P3:
        return 3.0 * max(t - s * s, 0.0) / (2.0 * t**1.5)
    root = math.sqrt(t)
    plus, minus = s + root, s - root
    first = p * (p - 1.0) * (abs(plus) ** (p - 2.0) + abs(minus) ** (p - 2.0)) / (4.0 * t)
    second = p * (_signed_power(plus, p - 2.0) - _signed_power(minus, p - 2.0)) / (4.0 * t**1.5)
    return max(first - second, 0.0)


def _weighted_power_integral(lo: float, hi: float, s: float, t: float, p: float) -> float:
    """``int_lo^hi |z|^{p-4} (t - (z-s)^2) dz`` on an interval not crossing 0."""
    if hi <= lo:
        return 0.0
    sign = 1.0 if hi > 0 else -1.0
    near, far = sorted((abs(lo), abs(hi)))

    def kernel(r):
        z = sign * r
        return t - (z - s) ** 2

    if 3 < p < 4 and near == 0.0:
        # z = w^{1/(p-3)} absorbs the |z|^{p-4} singularity at 0.
        exponent = 1.0 / (p - 3.0)
        value, err = integrate.quad(
            lambda w: kernel(w**exponent) * exponent,
            0.0,
            far ** (p - 3.0),
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
    else:
        value, err = integrate.quad(
            lambda r: r ** (p - 4.0) * kernel(r),
            near,
            far,
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
    if err > 1e-9 * max(abs(value), 1e-300):
        raise QuadratureNotConverged(f"psi'' integral on [{lo}, {hi}] has error estimate {err}")
    return value


def psi_second_integral(s: float, t: float, p: float) -> float:
    """``psi_s''(t)`` from its integral representation, split at ``z = 0``."""
    if t <= 0:
        raise DomainError(f"psi'' needs t > 0, got {t}")
    if p <= 3:
        raise DomainError(f"integral representation needs p > 3, got {p}")
    s = abs(s)
    root = math.sqrt(t)
    lo, hi = s - root, s + root
    if lo < 0 < hi:
        inner = _weighted_power_integral(lo, 0.0, s, t, p) + _weighted_power_integral(0.0, hi, s, t, p)
    else:
        inner = _weighted_power_integral(lo, hi, s, t, p)
    prefactor = p * (p - 1.0) * (p - 2.0) * (p - 3.0) / (4.0 * t**1.5)
    return prefactor * 0.5 * inner


def psi_second_lower_bound(s: float, t: float, p: float) -> float:
    if t <= 0:
        raise DomainError(f"psi'' needs t > 0, got {t}")
    regime = PsiRegime.from_p(p)
    s = abs(s)
    if regime is PsiRegime.P3:
        return psi_second(s, t, p)
    if regime is PsiRegime.P3TO4:
        return p * (p - 1.0) * (p - 2.0) * (p - 3.0) / 6.0 * (s + math.sqrt(t)) ** (p - 4.0)
    if regime is PsiRegime.P4:
        return 4.0
    at_zero = p * (p - 2.0) / 2.0 * t ** ((p - 4.0) / 2.0)
    large_s = 3.0 * p * (p - 1.0) * (p - 2.0) * (p - 3.0) / 64.0 * s ** (p - 4.0)
    return max(at_zero, large_s)


def psi_pair(s: float, x: float, t: float, p: float) -> float:
    """``(psi_s(x^2 (1 + t)) + psi_s(x^2 (1 - t))) / 2``."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if x <= 0:
        raise DomainError(f"x must be positive, got {x}")
    PsiRegime.from_p(p)
    x2 = x * x
    return 0.5 * (psi(s, x2 * (1.0 + t), p) + psi(s, x2 * (1.0 - t), p))
