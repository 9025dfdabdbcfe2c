"""
Explicit constants of the stability theorems.

* :func:`gauss_constant` is ``C_p`` in ``E|S|^p <= E|G|^p - C_p sum a_i^4``.
* :func:`diag_constant` is the constant of ``E|S|^p <= E|S_n|^p - C sum (a_i^2 - 1/n)^2``.
* :func:`t_step_constant` is the per-T-step constant ``C`` with
  ``gap >= 2C (a_1^2 - 1/n)(1/n - a_n^2)``.
* :func:`crit_constant` is the ``p = 3`` constant of the critical theorem.
* :func:`doubling_rate_constant` is ``C(p)`` in ``E|S_n|^p >= E|G|^p - C(p)/n``.

The two Gaussian-tail integrals are computed once per argument and memoized.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma

from khl.dist_core import gaussian_abs_moment
from khl.errors import DomainError, QuadratureNotConverged
from khl.psi_kernel import PsiRegime

logger = logging.getLogger(__name__)

INTEGRAL_UPPER = 80.0
ONE_MINUS_TWO_OVER_E = 1.0 - 2.0 / math.e


def _tail_weight(t: float) -> float:
    return t / ((t + 1.0) * math.sqrt(t + 1.0)) * math.exp(-(t + 1.0) / 2.0)


def _quad_on_tail(integrand, upper: float) -> float:
    value, err = integrate.quad(integrand, 1.0, upper, epsabs=1e-14, epsrel=1e-12, limit=200)
    if err > 1e-10:
        raise QuadratureNotConverged(f"tail integral error estimate {err} too large")
    return value


@lru_cache(maxsize=None)
def integral_p3(upper: float = INTEGRAL_UPPER) -> float:
    """``int_1^inf t/((t+1)^{3/2}) * (t-1)/t^{3/2} * exp(-(t+1)/2) dt``, truncated at ``upper``."""
    value = _quad_on_tail(lambda t: _tail_weight(t) * (t - 1.0) / (t * math.sqrt(t)), upper)
    logger.debug("integral_p3(upper=%s) = %s", upper, value)
    return value


@lru_cache(maxsize=None)
def integral_34(p: float, upper: float = INTEGRAL_UPPER) -> float:
    """``int_1^inf t/((t+1)^{3/2}) * (2 + sqrt t)^{p-4} * exp(-(t+1)/2) dt`` for ``3 < p < 4``."""
    if not 3 < p < 4:
        raise DomainError(f"integral_34 needs 3 < p < 4, got {p}")
    return _quad_on_tail(lambda t: _tail_weight(t) * (2.0 + math.sqrt(t)) ** (p - 4.0), upper)


def haagerup_tilde(p: float) -> float:
    """``min(2^{(p-6)/2}, 2^{(p-4)/2} Gamma((p-3)/2) / sqrt(pi))`` for ``4 < p < 6``."""
    if not 4 < p < 6:
        raise DomainError(f"haagerup_tilde needs 4 < p < 6, got {p}")
    return min(2.0 ** ((p - 6.0) / 2.0), 2.0 ** ((p - 4.0) / 2.0) * gamma((p - 3.0) / 2.0) / math.sqrt(math.pi))


def _falling4(p: float) -> float:
    return p * (p - 1.0) * (p - 2.0) * (p - 3.0)


def gauss_constant(p: float) -> float:
    regime = PsiRegime.from_p(p)
    if regime is PsiRegime.P3:
        return 9.0 / (32.0 * math.sqrt(2.0 * math.pi)) * integral_p3()
    if regime is PsiRegime.P3TO4:
        return _falling4(p) * ONE_MINUS_TWO_OVER_E / (6.0 * math.sqrt(2.0 * math.pi)) * integral_34(p)
    if regime is PsiRegime.P4:
        return 2.0
    base = 2.0 ** ((4.0 - p) / 2.0) * 3.0 * _falling4(p) / 128.0
    if p < 6:
        return base * haagerup_tilde(p)
    return base


def _large_p_cp(p: float) -> float:
    return 3.0 * _falling4(p) / 64.0


def _mid_p_cp(p: float) -> float:
    return _falling4(p) / 6.0


def diag_constant(p: float, moment_floor: float = 1.0) -> float:
    """Theorem-level diagonal constant; ``moment_floor`` bounds ``E|S|^{p-4}`` from below (used for p > 4)."""
    if p <= 3:
        raise DomainError(f"diag_constant needs p > 3, got {p}")
    if p == 4:
        return 8.0 / 25.0
    if p > 4:
        if moment_floor <= 0:
            raise DomainError(f"moment_floor must be positive, got {moment_floor}")
        return 2.0 * _large_p_cp(p) * moment_floor / 25.0
    return 2.0 * _mid_p_cp(p) * ONE_MINUS_TWO_OVER_E * (2.0 + math.sqrt(2.0)) ** (p - 4.0) / 25.0


def t_step_constant(p: float, middle_moment: float = 1.0) -> float:
    """Per-step ``C`` with ``gap >= 2C (a_1^2 - 1/n)(1/n - a_n^2)``.

    ``middle_moment`` is ``E|S|^{p-4}`` of the untouched middle coordinates (p > 4 only).
    """
    if p <= 3:
        raise DomainError(f"t_step_constant needs p > 3, got {p}")
    if p == 4:
        return 2.0
    if p > 4:
        return _large_p_cp(p) * middle_moment / 2.0
    return _mid_p_cp(p) * ONE_MINUS_TWO_OVER_E * (2.0 + math.sqrt(2.0)) ** (p - 4.0) / 2.0


def crit_constant() -> float:
    return 2.0**-6


def doubling_rate_constant(p: float) -> float:
    if p < 3:
        raise DomainError(f"doubling_rate_constant needs p >= 3, got {p}")
    return 2.0 * p * gaussian_abs_moment(p)


def even_integer_constant(p: float) -> float:
    """``E|G|^p - 1``: the conjectured optimal Gaussian-stability constant."""
    return gaussian_abs_moment(p) - 1.0


@dataclass(frozen=True)
class ConstantBundle:
    p: float
    gauss_C: float
    diag_C: float | None
    crit_C: float | None
    doubling_C: float
    branch: PsiRegime
    components: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["branch"] = str(self.branch)
        return data


def constant_bundle(p: float, moment_floor: float = 1.0) -> ConstantBundle:
    regime = PsiRegime.from_p(p)
    components: dict[str, float] = {"E|G|^p": gaussian_abs_moment(p)}
    if regime is PsiRegime.P3:
        components["integral_p3"] = integral_p3()
    elif regime is PsiRegime.P3TO4:
        components["c_p"] = _mid_p_cp(p)
        components["integral_34"] = integral_34(p)
    elif regime is PsiRegime.PGT4:
        components["c_p"] = _large_p_cp(p)
        components["moment_floor"] = moment_floor
        if p < 6:
            components["haagerup_tilde"] = haagerup_tilde(p)
    return ConstantBundle(
        p=p,
        gauss_C=gauss_constant(p),
        diag_C=None if regime is PsiRegime.P3 else diag_constant(p, moment_floor),
        crit_C=crit_constant() if regime is PsiRegime.P3 else None,
        doubling_C=doubling_rate_constant(p),
        branch=regime,
        components=components,
    )


def constant_table(p_min: float, p_max: float, step: float, moment_floor: float = 1.0) -> list[ConstantBundle]:
    if step <= 0 or p_max < p_min:
        raise DomainError(f"bad table range [{p_min}, {p_max}] with step {step}")
    count = int(math.floor((p_max - p_min) / step + 1e-9)) + 1
    grid = p_min + step * np.arange(count)
    return [constant_bundle(float(p), moment_floor) for p in grid]
