"""
Lemma-level checks: the Gaussian exchange step, the T-transformation step and
their compositions along the constructive proofs.

The exchange step compares ``E|S + aG|^p`` with ``E|S + a eps|^p`` where ``S``
already has a Gaussian part of mass ``b``; both are evaluated with
:func:`~khl.dist_core.mixed_abs_moment` (the extra ``a eps`` is convolved into the
atomic part, the extra ``aG`` enlarges the Gaussian mass to ``sqrt(b^2 + a^2)``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from khl.constants import crit_constant, gauss_constant, t_step_constant
from khl.dist_core import (
    CoefficientVector,
    absolute_moment,
    build_distribution,
    diagonal_moment,
    gaussian_abs_moment,
    mixed_abs_moment,
    sign_sum_distribution,
)
from khl.errors import DimensionTooLarge, DomainError, HypothesisViolated, IndexOutOfRange
from khl.schur_order import SquaresVector, diagonalize
from khl.settings import DEFAULT_TOL
from khl.verifiers.report import DeficitReport, make_report

logger = logging.getLogger(__name__)

EXCHANGE_MAX_REST = 20
EXCHANGE_CAP = 0.5
T_STEP_CAP_OFFSET = 0.9
HYPOTHESIS_EPS = 1e-12
TELESCOPE_TOL = 1e-10
COMPOSE_TOL = 1e-9
N2_GRID_POINTS = 10_000
N2_SAFETY = 0.9
TAYLOR_X = 1e-3
TAYLOR_RTOL = 0.05


@dataclass(frozen=True)
class ExchangeSplit:
    """``a`` with coordinates ``< i`` already replaced by Gaussians of total mass ``gaussian_mass``.

    ``i`` is the zero-based index of the coordinate being exchanged; when
    ``gaussian_mass`` is omitted it is ``sqrt(sum_{j<i} a_j^2)``.
    """

    a: CoefficientVector
    i: int
    gaussian_mass: float | None = None

    def __post_init__(self):
        if not 0 <= self.i < self.a.n:
            raise IndexOutOfRange(f"exchange index {self.i} out of range for n = {self.a.n}")
        prefix = math.sqrt(math.fsum(self.a.squares[: self.i]))
        if self.gaussian_mass is None:
            object.__setattr__(self, "gaussian_mass", prefix)
        elif self.gaussian_mass < 0 or abs(self.gaussian_mass**2 - prefix**2) > 1e-12:
            raise DomainError(
                f"gaussian_mass {self.gaussian_mass} is inconsistent with the exchanged prefix mass {prefix}"
            )

    @property
    def coefficient(self) -> float:
        return self.a.coeffs[self.i]

    @property
    def rest(self) -> tuple[float, ...]:
        return self.a.coeffs[self.i + 1 :]


def verify_exchange_step(split: ExchangeSplit, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """``E|S + aG|^p - E|S + a eps|^p >= C_p a^4`` for ``a^2 <= 1/2``."""
    if p < 3:
        raise DomainError(f"exchange step needs p >= 3, got {p}")
    c = split.coefficient
    if c * c > EXCHANGE_CAP + HYPOTHESIS_EPS:
        raise HypothesisViolated(f"exchanged coefficient has a^2 = {c * c} > 1/2")
    if len(split.rest) > EXCHANGE_MAX_REST:
        raise DimensionTooLarge(f"Rademacher remainder of length {len(split.rest)} exceeds {EXCHANGE_MAX_REST}")
    b = split.gaussian_mass
    with_gaussian = mixed_abs_moment(sign_sum_distribution(split.rest), math.hypot(b, c), p)
    with_sign = mixed_abs_moment(sign_sum_distribution((c,) + split.rest), b, p)
    gap = with_gaussian - with_sign
    constant = gauss_constant(p)
    bound = constant * c**4
    return make_report(
        "lem_exchange",
        lhs=gap,
        rhs=bound,
        n=split.a.n,
        p=p,
        deficit_term=c**4,
        constant_used=constant,
        margin=gap - bound,
        tol=tol,
        detail={"i": split.i, "a": c, "b": b, "with_gaussian": with_gaussian, "with_sign": with_sign},
    )


def verify_gauss_chain(a: CoefficientVector, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """Replace ``eps_1, ..., eps_n`` by Gaussians one at a time and add up the exchange bounds.

    The step gaps telescope to ``E|G|^p - E|S|^p``; the summed bounds
    ``C_p sum a_i^4`` must stay below that.
    """
    if a.squares[0] > EXCHANGE_CAP + HYPOTHESIS_EPS:
        raise HypothesisViolated(f"the exchange chain needs a_1^2 <= 1/2, got {a.squares[0]}")
    steps = [verify_exchange_step(ExchangeSplit(a, i), p, tol) for i in range(a.n)]
    exact = gaussian_abs_moment(p) - absolute_moment(build_distribution(a), p)
    accumulated = math.fsum(r.rhs for r in steps)
    gap_sum = math.fsum(r.lhs for r in steps)
    telescoped = abs(gap_sum - exact) <= COMPOSE_TOL * max(1.0, abs(exact))
    steps_ok = all(r.passed for r in steps)
    return make_report(
        "chain_gauss",
        lhs=accumulated,
        rhs=exact,
        n=a.n,
        p=p,
        deficit_term=a.fourth_power_sum,
        constant_used=gauss_constant(p),
        tol=tol,
        checks_ok=telescoped and steps_ok,
        detail={
            "step_margins": [r.margin for r in steps],
            "gap_sum": gap_sum,
            "telescoped": telescoped,
            "steps_ok": steps_ok,
        },
    )


def _middle_moment(squares: tuple[float, ...], p: float) -> float:
    middle = np.sqrt(np.asarray(squares[1:-1]))
    return absolute_moment(sign_sum_distribution(middle), p - 4.0)


def verify_t_step(a: CoefficientVector, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """Exact gain of ``(a_1^2, a_n^2) -> (a_1^2 + a_n^2 - 1/n, 1/n)`` against its lower bound.

    For ``p > 3`` the bound is ``2C (a_1^2 - 1/n)(1/n - a_n^2)`` with
    ``C = t_step_constant(p, E|S_mid|^{p-4})``; at ``p = 3`` it is
    ``C_3 sqrt(1/n (a^2 - 1/n)) / a^2 (a_1^2 - 1/n)(1/n - a_n^2)`` with
    ``a^2 = a_1^2 + a_n^2``.
    """
    if p < 3:
        raise DomainError(f"T-step needs p >= 3, got {p}")
    n = a.n
    if n < (2 if p == 3 else 3):
        raise HypothesisViolated(f"T-step at p = {p} needs more coordinates than n = {n}")
    squares = a.squares
    inv_n = 1.0 / n
    if p > 4 and squares[0] > T_STEP_CAP_OFFSET - inv_n + HYPOTHESIS_EPS:
        raise HypothesisViolated(f"T-step for p > 4 needs a_1^2 <= 0.9 - 1/n, got {squares[0]}")

    x, z = squares[0], squares[-1]
    pair = x + z
    moved = (max(pair - inv_n, 0.0),) + squares[1:-1] + (inv_n,)
    gap = absolute_moment(build_distribution(CoefficientVector.from_squares(moved)), p) - absolute_moment(
        build_distribution(a), p
    )
    spread = max(x - inv_n, 0.0) * max(inv_n - z, 0.0)
    detail = {"mu": inv_n / pair, "mu0": z / pair, "a2": pair}
    if p == 3:
        constant = crit_constant()
        bound = constant * math.sqrt(max(inv_n * (pair - inv_n), 0.0)) / pair * spread
    else:
        middle = _middle_moment(squares, p) if p > 4 else 1.0
        constant = t_step_constant(p, middle)
        bound = 2.0 * constant * spread
        if p > 4:
            detail["middle_moment"] = middle
    return make_report(
        "lem_tstep",
        lhs=gap,
        rhs=bound,
        n=n,
        p=p,
        deficit_term=spread,
        constant_used=constant,
        margin=gap - bound,
        tol=tol,
        detail=detail,
    )


def verify_step_identity(x: float, y: float, z: float, tol: float = 1e-12) -> DeficitReport:
    """``2(x - y)(y - z) = x^2 + z^2 - y^2 - (x - y + z)^2``."""
    lhs = 2.0 * (x - y) * (y - z)
    rhs = x * x + z * z - y * y - (x - y + z) ** 2
    scale = max(1.0, x * x, y * y, z * z)
    diff = abs(lhs - rhs)
    return make_report(
        "step_identity",
        lhs=lhs,
        rhs=rhs,
        margin=-diff,
        tol=tol,
        checks_ok=diff <= tol * scale,
        detail={"scale": scale},
    )


def verify_procedure_composition(a: CoefficientVector, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """Walk ``a`` to the diagonal and add up the per-step bounds.

    For ``p > 3`` every step bound is rewritten as ``C_i`` times the drop of
    ``sum b_i^4`` it causes; the drops telescope to ``sum a_i^4 - 1/n``. The
    accumulated bound must not exceed ``E|S_n|^p - E|S|^p``.
    """
    if p < 3:
        raise DomainError(f"composition needs p >= 3, got {p}")
    steps = diagonalize(SquaresVector(a.squares))
    inv_n = 1.0 / a.n
    bounds, drops, gaps = [], [], []
    steps_ok = identity_ok = True
    for step in steps:
        before = CoefficientVector.from_squares(step.before.squares)
        report = verify_t_step(before, p, tol)
        steps_ok = steps_ok and report.passed
        drop = math.fsum(v * v for v in step.before.squares) - math.fsum(v * v for v in step.after.squares)
        x, z = step.before.squares[0], step.before.squares[-1]
        identity = verify_step_identity(x, inv_n, z)
        identity_ok = identity_ok and identity.passed and abs(identity.lhs - drop) <= 1e-12
        drops.append(drop)
        gaps.append(report.lhs)
        bounds.append(report.constant_used * drop if p > 3 else report.rhs)

    exact = diagonal_moment(a.n, p) - absolute_moment(build_distribution(a), p)
    accumulated = math.fsum(bounds)
    drop_sum = math.fsum(drops)
    telescoped = abs(drop_sum - (a.fourth_power_sum - inv_n)) <= TELESCOPE_TOL
    logger.debug("Composition of %s steps: bound %s vs exact gap %s", len(steps), accumulated, exact)
    return make_report(
        "compose",
        lhs=accumulated,
        rhs=exact,
        n=a.n,
        p=p,
        deficit_term=drop_sum,
        tol=max(tol, COMPOSE_TOL),
        checks_ok=steps_ok and identity_ok and telescoped,
        detail={
            "steps": len(steps),
            "drop_sum": drop_sum,
            "gap_sum": math.fsum(gaps),
            "telescoped": telescoped,
            "identity_ok": identity_ok,
            "steps_ok": steps_ok,
        },
    )


def _n2_lhs(x, p: float):
    u = np.sqrt(0.5 + np.asarray(x, dtype=float))
    v = np.sqrt(np.maximum(0.5 - np.asarray(x, dtype=float), 0.0))
    return np.abs(u + v) ** p + np.abs(u - v) ** p


@lru_cache(maxsize=None)
def n2_constant(p: float) -> float:
    """``0.9 * min (2^{p/2} - LHS(x)) / x^2`` over an evenly spaced grid of ``(0, 1/2]``."""
    grid = np.linspace(0.5 / N2_GRID_POINTS, 0.5, N2_GRID_POINTS)
    ratios = (2.0 ** (p / 2.0) - _n2_lhs(grid, p)) / grid**2
    return N2_SAFETY * float(np.min(ratios))


def verify_n2_closed_form(x: float, p: float, tol: float = DEFAULT_TOL) -> DeficitReport:
    """Two coordinates with ``a^2 = (1/2 + x, 1/2 - x)``: ``LHS <= 2^{p/2} - C x^2``."""
    if not 0.0 <= x <= 0.5:
        raise DomainError(f"x must lie in [0, 1/2], got {x}")
    if p <= 3:
        raise DomainError(f"the two-coordinate check needs p > 3, got {p}")
    constant = n2_constant(p)
    lhs = float(_n2_lhs(x, p))
    top = 2.0 ** (p / 2.0)
    rhs = top - constant * x * x
    taylor_ratio = float((top - _n2_lhs(TAYLOR_X, p)) / TAYLOR_X**2)
    taylor_expected = 2.0 ** (p / 2.0 - 1.0) * p
    taylor_ok = abs(taylor_ratio - taylor_expected) <= TAYLOR_RTOL * taylor_expected
    return make_report(
        "n2",
        lhs=lhs,
        rhs=rhs,
        n=2,
        p=p,
        deficit_term=x * x,
        constant_used=constant,
        tol=tol,
        checks_ok=taylor_ok,
        detail={"taylor_ratio": taylor_ratio, "taylor_expected": taylor_expected, "taylor_ok": taylor_ok},
    )
