"""Diagonal-sum asymptotics: the doubling claim, the binomial moment bound and the ``1/n`` rate."""

from __future__ import annotations

import math

from khl.constants import doubling_rate_constant
from khl.dist_core import CoefficientVector, binomial_moment, diagonal_moment, gaussian_abs_moment
from khl.errors import DomainError
from khl.settings import DEFAULT_TOL
from khl.verifiers.report import DeficitReport, combine_checks, make_report

MAX_DOUBLING_N = 4096
# Above this p the e^{2p/n} form fails for small n (e.g. n = 4, p = 32); only the
# limit of the doubling chain, e^{p^2/(2n)}, is checked there.
RATE_MAX_P = 8.0


def _check_args(n: int, p: float) -> None:
    if not 1 <= n <= MAX_DOUBLING_N:
        raise DomainError(f"n must lie in [1, {MAX_DOUBLING_N}], got {n}")
    if p < 3:
        raise DomainError(f"p must be >= 3, got {p}")


def verify_doubling(n: int, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``E|S_2n|^p <= e^{p^2/4n} E|S_n|^p`` and its consequences for ``E|G|^p``."""
    _check_args(n, p)
    m_n = diagonal_moment(n, p)
    gaussian = gaussian_abs_moment(p)
    checks = {
        "doubling": (diagonal_moment(2 * n, p), math.exp(p * p / (4.0 * n)) * m_n),
        "chain_limit": (gaussian, math.exp(p * p / (2.0 * n)) * m_n),
    }
    if p <= RATE_MAX_P:
        checks["gaussian"] = (gaussian, math.exp(2.0 * p / n) * m_n)
        checks["rate"] = (gaussian - m_n, doubling_rate_constant(p) / n)
    margin, ok, detail = combine_checks(checks, tol)
    lhs, rhs = checks["doubling"]
    return make_report(
        "prop_doubling",
        lhs=lhs,
        rhs=rhs,
        n=n,
        p=p,
        deficit_term=gaussian - m_n,
        constant_used=doubling_rate_constant(p),
        margin=margin,
        tol=tol,
        checks_ok=ok,
        detail=detail,
    )


def verify_binomial_moment(n: int, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``E X^{p/2} <= (n/2)^{p/2} e^{p^2/4n}`` for ``X ~ Binomial(n, 1/2)``."""
    _check_args(n, p)
    lhs = binomial_moment(n, p / 2.0)
    rhs = (n / 2.0) ** (p / 2.0) * math.exp(p * p / (4.0 * n))
    return make_report("prop_binom", lhs=lhs, rhs=rhs, n=n, p=p, tol=tol)


def verify_optimality_witness(n: int, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """On the diagonal ``n sum a_i^4 = 1`` while ``n (E|G|^p - E|S_n|^p) <= C(p)``.

    So no bound of the form ``E|G|^p - C sum a_i^4`` can use a ``C`` above ``C(p)``.
    """
    _check_args(n, p)
    if p > RATE_MAX_P:
        raise DomainError(f"the 1/n rate is checked for p <= {RATE_MAX_P}, got {p}")
    scaled_gap = n * (gaussian_abs_moment(p) - diagonal_moment(n, p))
    constant = doubling_rate_constant(p)
    return make_report(
        "optimality",
        lhs=scaled_gap,
        rhs=constant,
        n=n,
        p=p,
        deficit_term=1.0 / n,
        constant_used=constant,
        tol=tol,
        detail={"n_fourth_power_sum": n * CoefficientVector.diagonal(n).fourth_power_sum},
    )


def optimality_table(p: float, n_max: int, tol: float = DEFAULT_TOL) -> list[DeficitReport]:
    rows = []
    n = 1
    while n <= n_max:
        rows.append(verify_optimality_witness(n, p, tol))
        n *= 2
    return rows
