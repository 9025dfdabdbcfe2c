"""
Executable checks of the three stability theorems and of Schur monotonicity.

Each check evaluates both sides exactly (atomic enumeration for ``E|S|^p``,
closed forms for the Gaussian and diagonal moments) and returns a
:class:`~khl.verifiers.report.DeficitReport`.
"""

from __future__ import annotations

import logging
import math

from khl.constants import crit_constant, diag_constant, gauss_constant, haagerup_tilde
from khl.dist_core import (
    CoefficientVector,
    absolute_moment,
    build_distribution,
    diagonal_moment,
    gaussian_abs_moment,
)
from khl.errors import DimensionTooLarge, DomainError, NotComparable
from khl.schur_order import SquaresVector, cap_largest, final_vector, majorizes
from khl.settings import DEFAULT_TOL
from khl.verifiers.report import DeficitReport, make_report, within

logger = logging.getLogger(__name__)

GAUSS_CAP = 0.5
DIAG_CAP_OFFSET = 0.9
FLOOR_BASE_MIN = 0.1
SCHUR_MAX_N = 20
BRANCH_EPS = 1e-12


def _moment(squares: tuple[float, ...], p: float) -> float:
    return absolute_moment(build_distribution(CoefficientVector.from_squares(squares)), p)


def _capped_check(a: CoefficientVector, cap: float, p: float, lhs: float, tol: float) -> tuple[bool, dict]:
    """Cap ``a_1^2`` with T-transformations and confirm the moment did not drop."""
    steps = cap_largest(SquaresVector(a.squares), cap)
    capped = final_vector(SquaresVector(a.squares), steps)
    capped_moment = _moment(capped.squares, p)
    ok = within(capped_moment - lhs, lhs, capped_moment, tol)
    return ok, {
        "capped_squares": list(capped.squares),
        "capped_moment": capped_moment,
        "cap_steps": len(steps),
        "schur_ok": ok,
    }


def verify_gauss_stability(a: CoefficientVector, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``E|S|^p <= E|G|^p - C_p sum a_i^4`` (``C_p / 4`` once ``a_1^2 > 1/2`` and ``n >= 2``)."""
    if p < 3:
        raise DomainError(f"Gaussian stability needs p >= 3, got {p}")
    lhs = absolute_moment(build_distribution(a), p)
    constant = gauss_constant(p)
    detail: dict = {"branch": "full"}
    checks_ok = True
    if a.n >= 2 and a.squares[0] > GAUSS_CAP + BRANCH_EPS:
        constant /= 4.0
        checks_ok, capped = _capped_check(a, GAUSS_CAP, p, lhs, tol)
        detail = {"branch": "capped", **capped}
    deficit = a.fourth_power_sum
    rhs = gaussian_abs_moment(p) - constant * deficit
    detail["fourth_power_sum"] = deficit
    return make_report(
        "thm_gauss",
        lhs=lhs,
        rhs=rhs,
        n=a.n,
        p=p,
        deficit_term=deficit,
        constant_used=constant,
        tol=tol,
        checks_ok=checks_ok,
        detail=detail,
    )


def diag_moment_floor(a: CoefficientVector, p: float) -> float:
    """Lower bound on ``E|S_mid|^{p-4}`` valid along the whole diagonalization of ``a``.

    Every step moves ``(b_1, b_n)`` with ``b_1 <= min(a_1^2, 0.9 - 1/n)`` and
    ``b_n <= 1/n``, so the untouched middle has variance at least
    ``1 - min(a_1^2, 0.9 - 1/n) - 1/n``.
    """
    if p <= 4:
        return 1.0
    inv_n = 1.0 / a.n
    base = max(1.0 - min(a.squares[0], DIAG_CAP_OFFSET - inv_n) - inv_n, FLOOR_BASE_MIN)
    floor = base ** ((p - 4.0) / 2.0)
    if p < 6:
        floor *= haagerup_tilde(p)
    return floor


def verify_diag_stability(a: CoefficientVector, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``E|S|^p <= E|S_n|^p - C sum (a_i^2 - 1/n)^2`` for ``p > 3``."""
    if p <= 3:
        raise DomainError(f"diagonal stability needs p > 3, got {p}")
    lhs = absolute_moment(build_distribution(a), p)
    floor = diag_moment_floor(a, p)
    constant = diag_constant(p, floor)
    deficit = a.diagonal_distance()
    rhs = diagonal_moment(a.n, p) - constant * deficit
    detail: dict = {"deficit_sum": deficit, "moment_floor": floor}
    checks_ok = True
    if a.n <= 2:
        detail["branch"] = "n<=2"
    elif a.squares[0] > DIAG_CAP_OFFSET - 1.0 / a.n + BRANCH_EPS:
        checks_ok, capped = _capped_check(a, DIAG_CAP_OFFSET - 1.0 / a.n, p, lhs, tol)
        detail.update(branch="capped", **capped)
    else:
        detail["branch"] = "direct"
    return make_report(
        "thm_diag",
        lhs=lhs,
        rhs=rhs,
        n=a.n,
        p=p,
        deficit_term=deficit,
        constant_used=constant,
        tol=tol,
        checks_ok=checks_ok,
        detail=detail,
    )


def crit_deficit(a: CoefficientVector) -> float:
    """The ``p = 3`` deficit ``sum sqrt(1/n (a_i^2 + a_n^2 - 1/n)) (a_i^2 - 1/n)_+ (1/n - a_{n+1-i}^2)_+ / (a_1^2 + 1/n)``."""
    squares = a.squares
    n = a.n
    inv_n = 1.0 / n
    terms = []
    for i in range(n):
        above = squares[i] - inv_n
        below = inv_n - squares[n - 1 - i]
        if above <= 0 or below <= 0:
            continue
        radicand = inv_n * (squares[i] + squares[-1] - inv_n)
        if radicand < 0:
            if radicand < -1e-14:
                raise DomainError(f"negative radicand {radicand} at i = {i}")
            radicand = 0.0
        terms.append(math.sqrt(radicand) * above * below)
    return math.fsum(terms) / (squares[0] + inv_n)


def verify_crit_stability(a: CoefficientVector, tol: float = DEFAULT_TOL) -> DeficitReport:
    lhs = absolute_moment(build_distribution(a), 3.0)
    constant = crit_constant()
    deficit = crit_deficit(a)
    rhs = diagonal_moment(a.n, 3.0) - constant * deficit
    return make_report(
        "thm_crit",
        lhs=lhs,
        rhs=rhs,
        n=a.n,
        p=3.0,
        deficit_term=deficit,
        constant_used=constant,
        tol=tol,
        detail={"deficit_sum": deficit},
    )


def _ordered(x: SquaresVector, y: SquaresVector) -> tuple[SquaresVector, SquaresVector, bool]:
    """Return ``(lower, upper, swapped)`` with ``lower ≺ upper``."""
    if majorizes(x, y):
        return x, y, False
    if majorizes(y, x):
        return y, x, True
    raise NotComparable(f"{list(x.squares)} and {list(y.squares)} are not comparable in the Schur order")


def verify_schur_monotonicity(
    x: SquaresVector, y: SquaresVector, p: float, tol: float = DEFAULT_TOL
) -> DeficitReport:
    """If ``x ≺ y`` then the ``y``-sum has the smaller ``p``-th moment."""
    if p < 3:
        raise DomainError(f"Schur monotonicity is checked for p >= 3, got {p}")
    if max(x.n, y.n) > SCHUR_MAX_N:
        raise DimensionTooLarge(f"Schur checks are capped at n = {SCHUR_MAX_N}")
    lower, upper, swapped = _ordered(x, y)
    n = max(x.n, y.n)
    lhs = _moment(upper.padded(n), p)
    rhs = _moment(lower.padded(n), p)
    return make_report(
        "prop_schur",
        lhs=lhs,
        rhs=rhs,
        n=n,
        p=p,
        tol=tol,
        detail={"swapped": swapped, "lower": list(lower.squares), "upper": list(upper.squares)},
    )


def verify_deficit_monotonicity(x: SquaresVector, y: SquaresVector, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``x ≺ y`` implies ``sum x_i^2 <= sum y_i^2``: the deficit ``sum a_i^4`` is Schur-convex."""
    lower, upper, swapped = _ordered(x, y)
    lhs = math.fsum(v * v for v in lower.squares)
    rhs = math.fsum(v * v for v in upper.squares)
    return make_report(
        "deficit_monotone",
        lhs=lhs,
        rhs=rhs,
        n=max(x.n, y.n),
        tol=tol,
        detail={"swapped": swapped},
    )

