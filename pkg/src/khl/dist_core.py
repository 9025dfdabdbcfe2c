"""
Exact laws and moments of Rademacher sums.

A Rademacher sum ``S = sum(a_i * eps_i)`` has a finite symmetric law. We keep only
its nonnegative half: an atom at 0 carries its full weight, every positive atom
``v`` carries the weight of ``+v`` (and implicitly the same weight at ``-v``).

Usage::

    from khl.dist_core import CoefficientVector, build_distribution, absolute_moment

    a = CoefficientVector((1.0, 1.0))          # renormalized to (1/sqrt2, 1/sqrt2)
    d = build_distribution(a)                  # atoms [(0, 1/2), (sqrt2, 1/4)]
    absolute_moment(d, 4)                      # -> 2.0

Moments of ``S + bG`` with an independent standard Gaussian ``G`` are computed
per atom by Gauss quadrature (see :func:`mixed_abs_moment`).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, logsumexp, ndtr

from khl.errors import (
    DimensionTooLarge,
    DomainError,
    InvalidCoefficients,
    InvalidMomentQuery,
    QuadratureNotConverged,
)
from khl.settings import MAX_GENERAL_N, MAX_STANDARD_P, MERGE_RTOL

logger = logging.getLogger(__name__)

EXACT_BINOMIAL_MAX_N = 50
QUADRATURE_LEVELS = (64, 128, 256, 512)
QUADRATURE_RTOL = 1e-10
_ATOM_CHUNK = 2048


@dataclass(frozen=True)
class CoefficientVector:
    """Normalized, descending coefficients ``a_1 >= ... >= a_n >= 0`` with ``sum a_i^2 = 1``.

    The constructor accepts any nonzero finite sequence; signs are dropped (they do
    not change the law of the sum), entries are sorted and the vector is rescaled.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        raw = np.asarray(self.coeffs, dtype=float).ravel()
        if raw.size == 0:
            raise InvalidCoefficients("coefficient vector is empty")
        if not np.all(np.isfinite(raw)):
            raise InvalidCoefficients(f"coefficients must be finite: {raw.tolist()}")
        magnitudes = np.sort(np.abs(raw))[::-1]
        norm = math.sqrt(math.fsum(float(c) * float(c) for c in magnitudes))
        if norm == 0.0:
            raise InvalidCoefficients("coefficients are all zero")
        scaled = tuple(float(c) / norm for c in magnitudes)
        total = math.fsum(c * c for c in scaled)
        if abs(total - 1.0) > 1e-12:
            raise InvalidCoefficients(f"normalization failed, sum of squares = {total!r}")
        object.__setattr__(self, "coeffs", scaled)

    @classmethod
    def from_squares(cls, squares: Sequence[float]) -> "CoefficientVector":
        squares = np.asarray(squares, dtype=float).ravel()
        if np.any(squares < 0):
            raise InvalidCoefficients(f"squared coefficients must be nonnegative: {squares.tolist()}")
        return cls(tuple(np.sqrt(squares)))

    @classmethod
    def diagonal(cls, n: int) -> "CoefficientVector":
        if n < 1:
            raise InvalidCoefficients(f"dimension must be positive, got {n}")
        return cls((1.0,) * n)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def squares(self) -> tuple[float, ...]:
        return tuple(c * c for c in self.coeffs)

    @property
    def fourth_power_sum(self) -> float:
        return math.fsum(c**4 for c in self.coeffs)

    def diagonal_distance(self) -> float:
        """``sum (a_i^2 - 1/n)^2``, the deficit of the diagonal comparison."""
        inv_n = 1.0 / self.n
        return math.fsum((sq - inv_n) ** 2 for sq in self.squares)


@dataclass(frozen=True)
class SymmetricAtomicDistribution:
    """Nonnegative half of a symmetric finite law; ``values`` strictly increasing."""

    values: np.ndarray
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1 or values.size == 0:
            raise InvalidCoefficients("values and weights must be equal-length 1-d arrays")
        if np.any(values < 0) or np.any(weights <= 0):
            raise InvalidCoefficients("atoms need nonnegative values and positive weights")
        if np.any(np.diff(values) <= 0):
            raise InvalidCoefficients("atom values must be strictly increasing")
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        mass = math.fsum(self.closure_masses)
        if abs(mass - 1.0) > 1e-12:
            raise InvalidCoefficients(f"symmetric closure has mass {mass!r}, expected 1")

    @property
    def closure_masses(self) -> np.ndarray:
        """Mass of ``{+v, -v}`` for every stored atom."""
        return np.where(self.values > 0, 2.0 * self.weights, self.weights)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class MomentQuery:
    p: float
    mode: str = "standard"

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p < 0:
            raise InvalidMomentQuery(f"moment exponent must be finite and >= 0, got {self.p!r}")
        if self.mode not in ("standard", "log-space"):
            raise InvalidMomentQuery(f"Unknown precision mode: {self.mode}")
        if self.mode == "standard" and p > MAX_STANDARD_P:
            raise InvalidMomentQuery(
                f"p = {p} exceeds {MAX_STANDARD_P} in standard mode; use mode='log-space'"
            )
        object.__setattr__(self, "p", p)


def _merge_atoms(values: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by value and merge neighbours within the hybrid merge tolerance."""
    values = np.where(values <= MERGE_RTOL, 0.0, values)
    order = np.argsort(values, kind="stable")
    values = values[order]
    masses = masses[order]
    gaps = np.diff(values)
    starts = np.concatenate(([True], gaps > MERGE_RTOL * np.maximum(1.0, values[:-1])))
    group = np.cumsum(starts) - 1
    merged = np.bincount(group, weights=masses)
    return values[starts], merged


def sign_sum_distribution(coeffs: Sequence[float]) -> SymmetricAtomicDistribution:
    """Law of ``sum c_i eps_i`` for arbitrary nonnegative ``c_i`` (empty gives the point mass at 0).

    Works on closure masses: an atom ``v`` of closure mass ``m`` splits into
    ``v + c`` and ``|v - c|`` with ``m/2`` each.
    """
    coeffs = np.abs(np.asarray(coeffs, dtype=float).ravel())
    if coeffs.size > MAX_GENERAL_N:
        raise DimensionTooLarge(f"n = {coeffs.size} exceeds the cap of {MAX_GENERAL_N}")
    values = np.zeros(1)
    masses = np.ones(1)
    for c in coeffs:
        if c == 0.0:
            continue
        values = np.concatenate((values + c, np.abs(values - c)))
        masses = np.concatenate((masses, masses)) / 2.0
        values, masses = _merge_atoms(values, masses)
    weights = np.where(values > 0, masses / 2.0, masses)
    return SymmetricAtomicDistribution(values=values, weights=weights)


def build_distribution(a: CoefficientVector) -> SymmetricAtomicDistribution:
    if a.n > MAX_GENERAL_N:
        raise DimensionTooLarge(f"n = {a.n} exceeds the cap of {MAX_GENERAL_N}")
    d = sign_sum_distribution(a.coeffs)
    logger.debug("Built distribution for n=%s with %s atoms", a.n, len(d))
    return d


def _as_query(q: MomentQuery | float) -> MomentQuery:
    if isinstance(q, MomentQuery):
        return q
    return MomentQuery(float(q))


def absolute_moment(d: SymmetricAtomicDistribution, q: MomentQuery | float) -> float:
    """``E|S|^p`` summed over the symmetric closure. For ``p = 0`` this is ``P(S != 0)``."""
    q = _as_query(q)
    positive = d.values > 0
    values = d.values[positive]
    masses = d.closure_masses[positive]
    if values.size == 0:
        return 0.0
    if q.mode == "log-space":
        return float(np.exp(logsumexp(np.log(masses) + q.p * np.log(values))))
    return math.fsum(masses * values**q.p)


def _log_binomial_weights(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) - n * math.log(2.0)


def diagonal_moment(n: int, p: float) -> float:
    """``E|S_n|^p`` for ``S_n = n^{-1/2} sum eps_i``; log-space binomials above n = 50."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    if n <= EXACT_BINOMIAL_MAX_N and p <= MAX_STANDARD_P:
        terms = [math.comb(n, k) * float(abs(n - 2 * k)) ** p for k in range(n + 1) if n != 2 * k]
        return math.fsum(terms) * 2.0**-n * n ** (-p / 2.0)
    k = np.arange(n + 1)
    keep = n - 2 * k != 0
    log_terms = _log_binomial_weights(n)[keep] + p * np.log(np.abs(n - 2 * k[keep]))
    return float(np.exp(logsumexp(log_terms) - 0.5 * p * math.log(n)))


def binomial_moment(n: int, q: float) -> float:
    """``E X^q`` for ``X ~ Binomial(n, 1/2)``."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if q < 0:
        raise DomainError(f"q must be >= 0, got {q}")
    if n <= EXACT_BINOMIAL_MAX_N and q <= MAX_STANDARD_P:
        terms = [math.comb(n, k) * float(k) ** q for k in range(1, n + 1)]
        return math.fsum(terms) * 2.0**-n
    k = np.arange(1, n + 1)
    log_terms = _log_binomial_weights(n)[1:] + q * np.log(k)
    return float(np.exp(logsumexp(log_terms)))


def gaussian_abs_moment(p: float) -> float:
    """``E|G|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)``."""
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    log_value = 0.5 * p * math.log(2.0) + gammaln((p + 1.0) / 2.0) - 0.5 * math.log(math.pi)
    return float(math.exp(log_value))


@lru_cache(maxsize=None)
def _hermite_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermgauss(nodes)
    # E f(G) = pi^{-1/2} sum w_i f(sqrt(2) x_i)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


@lru_cache(maxsize=None)
def _legendre_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return leggauss(nodes)


def _gaussian_bulk(p: float) -> float:
    """Half-width in Gaussian units outside of which ``|s + bG|^p phi(G)`` is negligible."""
    return 12.0 + 2.0 * math.sqrt(p)


def _hermite_total(s: np.ndarray, masses: np.ndarray, b: float, p: float, nodes: int) -> float:
    g, w = _hermite_rule(nodes)
    parts = []
    for start in range(0, s.size, _ATOM_CHUNK):
        block = s[start : start + _ATOM_CHUNK, None]
        per_atom = np.abs(block + b * g[None, :]) ** p @ w
        parts.append(masses[start : start + _ATOM_CHUNK] @ per_atom)
    return math.fsum(parts)


def _legendre_total(s: np.ndarray, masses: np.ndarray, b: float, p: float, nodes: int) -> float:
    """Gauss-Legendre on ``[-R, kink]`` and ``[kink, R]`` with the kink at ``-s/b``."""
    u, w = _legendre_rule(nodes)
    reach = _gaussian_bulk(p)
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    parts = []
    for start in range(0, s.size, _ATOM_CHUNK):
        block = s[start : start + _ATOM_CHUNK]
        kink = np.maximum(-block / b, -reach)
        per_atom = np.zeros(block.size)
        for lo, hi in ((np.full_like(kink, -reach), kink), (kink, np.full_like(kink, reach))):
            half = (hi - lo) / 2.0
            g = (hi + lo)[:, None] / 2.0 + half[:, None] * u[None, :]
            f = np.abs(block[:, None] + b * g) ** p * np.exp(-0.5 * g * g) * norm
            per_atom += half * (f @ w)
        parts.append(masses[start : start + _ATOM_CHUNK] @ per_atom)
    return math.fsum(parts)


def _doubled(total_at, label: str) -> tuple[float, bool]:
    previous = None
    for nodes in QUADRATURE_LEVELS:
        current = total_at(nodes)
        if previous is not None and abs(current - previous) <= QUADRATURE_RTOL * abs(current):
            logger.debug("%s quadrature converged at %s nodes", label, nodes)
            return current, True
        previous = current
    return previous, False


def mixed_abs_moment(d: SymmetricAtomicDistribution, b: float, p: float) -> float:
    """``E|S + bG|^p`` with ``G`` standard Gaussian independent of ``S``.

    Atoms at 0 use ``b^p E|G|^p``. Atoms whose kink ``-s/b`` is outside the
    Gaussian bulk are integrated by Gauss-Hermite; the others by Gauss-Legendre
    split at the kink. Both rules double their node count from 64 up to 512 until
    successive totals agree to 1e-10 relative.
    """
    if b < 0:
        raise DomainError(f"Gaussian mass must be >= 0, got {b}")
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")
    if b == 0:
        return absolute_moment(d, p)

    masses = d.closure_masses
    zero = d.values == 0
    parts = [math.fsum(masses[zero]) * b**p * gaussian_abs_moment(p)]

    s = d.values[~zero]
    m = masses[~zero]
    near = s / b <= _gaussian_bulk(p)
    if np.any(~near):
        total, ok = _doubled(lambda k: _hermite_total(s[~near], m[~near], b, p, k), "Gauss-Hermite")
        if ok:
            parts.append(total)
        else:
            logger.debug("Gauss-Hermite did not settle; moving %s atoms to the split rule", int(np.sum(~near)))
            near = np.ones_like(near)
    if np.any(near):
        total, ok = _doubled(lambda k: _legendre_total(s[near], m[near], b, p, k), "Gauss-Legendre")
        if not ok:
            raise QuadratureNotConverged(
                f"E|S + {b}G|^{p} did not stabilize to {QUADRATURE_RTOL} with {QUADRATURE_LEVELS[-1]} nodes"
            )
        parts.append(total)
    return math.fsum(parts)


def interval_probability(d: SymmetricAtomicDistribution, a: float) -> float:
    """``P(|S| <= a)``; atoms at exactly ``a`` count."""
    if a < 0:
        raise DomainError(f"interval half-width must be >= 0, got {a}")
    inside = d.values <= a + MERGE_RTOL * max(1.0, a)
    return min(1.0, math.fsum(d.closure_masses[inside]))


def mixed_interval_probability(d: SymmetricAtomicDistribution, b: float, a: float) -> float:
    """``P(|S + bG| <= a)`` as a sum of normal-CDF differences over atoms."""
    if b < 0:
        raise DomainError(f"Gaussian mass must be >= 0, got {b}")
    if b == 0:
        return interval_probability(d, a)
    if a < 0:
        raise DomainError(f"interval half-width must be >= 0, got {a}")
    s = d.values
    per_atom = ndtr((a - s) / b) - ndtr((-a - s) / b)
    return min(1.0, math.fsum(d.closure_masses * per_atom))


def distribution_to_json(d: SymmetricAtomicDistribution) -> list[list[float]]:
    return [[v, w] for v, w in d.atoms]
