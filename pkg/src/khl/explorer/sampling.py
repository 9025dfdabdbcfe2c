"""
Seeded coefficient-vector samplers.

Every sample is a pure function of ``(strategy, n, seed, index)``: the generator
is ``numpy.random.default_rng([seed, n, index])``, so samples can be regenerated
one at a time in any worker and in any order.

Strategies:

* ``simplex`` - squares uniform on the simplex (normalized exponential spacings).
* ``near_diagonal`` - ``1/n`` plus a centred perturbation of relative size ``perturbation``.
* ``spiky`` - ``a_1^2`` in ``{0.49, 0.51, 0.9}`` (cycled by index), the rest equal.
* ``grid`` - the points of :func:`simplex_grid`, cycled by index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from khl.dist_core import CoefficientVector
from khl.errors import DomainError
from khl.schur_order import SquaresVector

STRATEGIES = ("simplex", "near_diagonal", "spiky", "grid")
SPIKES = (0.49, 0.51, 0.9)
MAX_SEARCH_N = 20
MAX_SAMPLES = 10_000_000
DEFAULT_PERTURBATION = 0.1
DEFAULT_GRID_STEP = 0.05


@dataclass(frozen=True)
class SearchConfig:
    p: float
    n_min: int = 1
    n_max: int = 8
    samples: int = 1000
    seed: int = 0
    strategy: str = "simplex"
    grid_step: float = DEFAULT_GRID_STEP
    perturbation: float = DEFAULT_PERTURBATION

    def __post_init__(self):
        if self.p < 3:
            raise DomainError(f"searches run for p >= 3, got {self.p}")
        if not 1 <= self.n_min <= self.n_max <= MAX_SEARCH_N:
            raise DomainError(f"need 1 <= n_min <= n_max <= {MAX_SEARCH_N}, got [{self.n_min}, {self.n_max}]")
        if not 1 <= self.samples <= MAX_SAMPLES:
            raise DomainError(f"samples must lie in [1, {MAX_SAMPLES}], got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"Unknown sampling strategy: {self.strategy}")
        grid_total(self.grid_step)
        if not 0 <= self.perturbation <= 1:
            raise DomainError(f"perturbation must lie in [0, 1], got {self.perturbation}")

    @property
    def span(self) -> int:
        return self.n_max - self.n_min + 1

    def n_for(self, index: int) -> int:
        return self.n_min + index % self.span


def _partitions(total: int, parts: int, largest: int):
    if total == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def grid_total(step: float) -> int:
    """``K`` for a grid step of ``1/K``."""
    total = round(1.0 / step) if step > 0 else 0
    if total < 1 or abs(total * step - 1.0) > 1e-9:
        raise DomainError(f"grid step must be 1/K for a positive integer K, got {step}")
    return total


@lru_cache(maxsize=None)
def simplex_grid(n: int, step: float) -> tuple[SquaresVector, ...]:
    """Descending squares vectors with entries in ``step * Z``: partitions of ``1/step`` into at most ``n`` parts."""
    total = grid_total(step)
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    points = []
    for parts in _partitions(total, n, total):
        padded = parts + (0,) * (n - len(parts))
        points.append(SquaresVector(tuple(k / total for k in padded)))
    return tuple(points)


def _simplex(rng: np.random.Generator, n: int, index: int, perturbation: float, grid_step: float) -> np.ndarray:
    spacings = rng.exponential(size=n)
    return spacings / spacings.sum()


def _near_diagonal(rng: np.random.Generator, n: int, index: int, perturbation: float, grid_step: float) -> np.ndarray:
    delta = rng.uniform(-1.0, 1.0, size=n)
    delta -= delta.mean()
    squares = np.clip(1.0 / n + perturbation / n * delta, 0.0, None)
    return squares / squares.sum()


def _spiky(rng: np.random.Generator, n: int, index: int, perturbation: float, grid_step: float) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    top = SPIKES[index % len(SPIKES)]
    return np.array([top] + [(1.0 - top) / (n - 1)] * (n - 1))


def _grid(rng: np.random.Generator, n: int, index: int, perturbation: float, grid_step: float) -> np.ndarray:
    points = simplex_grid(n, grid_step)
    return np.asarray(points[index % len(points)].squares)


def sample_squares(
    strategy: str,
    n: int,
    seed: int,
    index: int,
    perturbation: float = DEFAULT_PERTURBATION,
    grid_step: float = DEFAULT_GRID_STEP,
) -> np.ndarray:
    samplers = {
        "simplex": _simplex,
        "near_diagonal": _near_diagonal,
        "spiky": _spiky,
        "grid": _grid,
    }
    try:
        sampler = samplers[strategy]
    except KeyError as exc:
        raise ValueError(f"Unknown sampling strategy: {strategy}") from exc
    if n < 1:
        raise DomainError(f"dimension must be positive, got {n}")
    rng = np.random.default_rng([seed, n, index])
    return sampler(rng, n, index, perturbation, grid_step)


def sample_vector(
    strategy: str,
    n: int,
    seed: int,
    index: int,
    perturbation: float = DEFAULT_PERTURBATION,
    grid_step: float = DEFAULT_GRID_STEP,
) -> CoefficientVector:
    return CoefficientVector.from_squares(sample_squares(strategy, n, seed, index, perturbation, grid_step))


def config_vector(cfg: SearchConfig, index: int) -> CoefficientVector:
    return sample_vector(cfg.strategy, cfg.n_for(index), cfg.seed, index, cfg.perturbation, cfg.grid_step)
