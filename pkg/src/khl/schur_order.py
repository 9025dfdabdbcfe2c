"""
Schur majorization on squared coefficients and the T-transformation procedures.

``x ≺ y`` (``majorizes(x, y)``) means every prefix sum of the decreasing
rearrangement of ``x`` is at most the matching prefix sum of ``y``. The two
procedures here walk a vector down the Schur order one T-transformation at a time:

* :func:`diagonalize` reaches ``(1/n, ..., 1/n)``, pinning one entry to ``1/n`` per step.
* :func:`cap_largest` lowers the largest entry to a cap, filling the smallest entries first.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from khl.errors import CapInfeasible, IndexOutOfRange, InvalidCoefficients, LambdaOutOfRange, StepLimitExceeded
from khl.settings import PIN_TOL

logger = logging.getLogger(__name__)

PREFIX_TOL = 1e-12


@dataclass(frozen=True)
class SquaresVector:
    """Descending point of the simplex: the squared coefficients ``a_i^2``."""

    squares: tuple[float, ...]

    def __post_init__(self):
        values = [float(v) for v in self.squares]
        if not values:
            raise InvalidCoefficients("squares vector is empty")
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise InvalidCoefficients(f"squares must be finite and nonnegative: {values}")
        total = math.fsum(values)
        if abs(total - 1.0) > 1e-12:
            raise InvalidCoefficients(f"squares must sum to 1, got {total!r}")
        object.__setattr__(self, "squares", tuple(sorted(values, reverse=True)))

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "SquaresVector":
        total = math.fsum(float(v) for v in values)
        if total <= 0:
            raise InvalidCoefficients("squares must have positive total")
        return cls(tuple(float(v) / total for v in values))

    @classmethod
    def diagonal(cls, n: int) -> "SquaresVector":
        return cls((1.0 / n,) * n)

    @property
    def n(self) -> int:
        return len(self.squares)

    def padded(self, n: int) -> tuple[float, ...]:
        return self.squares + (0.0,) * max(0, n - self.n)


@dataclass(frozen=True)
class TTransformStep:
    before: SquaresVector
    after: SquaresVector
    j: int
    k: int
    lam: float
    deficit_bound: float = 0.0

    def with_bound(self, bound: float) -> "TTransformStep":
        return replace(self, deficit_bound=bound)

    def to_dict(self) -> dict:
        return {
            "before": list(self.before.squares),
            "after": list(self.after.squares),
            "j": self.j,
            "k": self.k,
            "lambda": self.lam,
            "deficit_bound": self.deficit_bound,
        }


def majorizes(x: SquaresVector, y: SquaresVector) -> bool:
    """True when ``x ≺ y``, i.e. ``y`` majorizes ``x``."""
    n = max(x.n, y.n)
    px = np.cumsum(x.padded(n))
    py = np.cumsum(y.padded(n))
    return bool(np.all(px <= py + PREFIX_TOL))


def t_transform(x: SquaresVector, j: int, k: int, lam: float) -> SquaresVector:
    """Replace ``(x_j, x_k)`` by ``((1-lam) x_j + lam x_k, lam x_j + (1-lam) x_k)``."""
    if not (0 <= j < x.n and 0 <= k < x.n):
        raise IndexOutOfRange(f"indices ({j}, {k}) out of range for n = {x.n}")
    if j == k:
        raise IndexOutOfRange(f"T-transformation needs two distinct indices, got j = k = {j}")
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"lambda must lie in [0, 1], got {lam}")
    values = list(x.squares)
    xj, xk = values[j], values[k]
    values[j] = (1.0 - lam) * xj + lam * xk
    values[k] = lam * xj + (1.0 - lam) * xk
    return SquaresVector(tuple(values))


def _step(before: list[float], j: int, k: int, new_j: float, new_k: float) -> TTransformStep:
    spread = before[j] - before[k]
    lam = 0.0 if spread == 0 else (before[j] - new_j) / spread
    lam = min(max(lam, 0.0), 1.0)
    after = list(before)
    after[j], after[k] = new_j, new_k
    return TTransformStep(
        before=SquaresVector(tuple(before)),
        after=SquaresVector(tuple(after)),
        j=j,
        k=k,
        lam=lam,
    )


def diagonalize(x: SquaresVector) -> list[TTransformStep]:
    """T-transformations ``(b_1, ..., b_n) -> (b_1 + b_n - 1/n, ..., 1/n)`` down to the diagonal.

    Each step combines the current largest and smallest entries and pins the one
    closer to ``1/n``; the other takes ``b_1 + b_n - 1/n``.
    """
    n = x.n
    target = 1.0 / n
    current = list(x.squares)
    steps: list[TTransformStep] = []
    while current[0] - target > PIN_TOL or target - current[-1] > PIN_TOL:
        j, k = 0, n - 1
        largest, smallest = current[j], current[k]
        moved = largest + smallest - target
        if largest - target <= target - smallest:
            step = _step(current, j, k, target, moved)
        else:
            step = _step(current, j, k, moved, target)
        steps.append(step)
        current = list(step.after.squares)
        if len(steps) > n:
            raise StepLimitExceeded(f"diagonalize did not terminate for {x.squares}")
    logger.debug("Diagonalized n=%s in %s steps", n, len(steps))
    return steps


def cap_largest(x: SquaresVector, cap: float) -> list[TTransformStep]:
    """Move mass from the largest entry into the smallest ones until it is at most ``cap``."""
    n = x.n
    if n < 2 or cap < 1.0 / n:
        raise CapInfeasible(f"cannot cap the largest of {n} entries at {cap} (needs n >= 2 and cap >= 1/n)")
    current = list(x.squares)
    steps: list[TTransformStep] = []
    while current[0] > cap + PREFIX_TOL:
        k = n - 1
        excess = current[0] - cap
        room = cap - current[k]
        if room <= 0:
            raise CapInfeasible(f"no room below the cap {cap} in {current}")
        if excess <= room:
            step = _step(current, 0, k, cap, current[k] + excess)
        else:
            step = _step(current, 0, k, current[0] - room, cap)
        steps.append(step)
        current = list(step.after.squares)
        if len(steps) > n:
            raise StepLimitExceeded(f"cap_largest did not terminate for {x.squares}")
    return steps


def final_vector(x: SquaresVector, steps: list[TTransformStep]) -> SquaresVector:
    return steps[-1].after if steps else x
