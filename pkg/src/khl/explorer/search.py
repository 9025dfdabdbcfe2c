"""
Seeded searches for counterexamples to the conjectured sharp constants.

* ``gauss``: ``E|S|^p <= E|G|^p - (E|G|^p - 1) sum a_i^4``; the per-sample margin
  is ``rhs - lhs`` and the constant estimate is ``inf (E|G|^p - E|S|^p) / sum a_i^4``.
* ``crit``: ``E|S|^3 <= E|S_n|^3 - C sum (a_i^2 - 1/n)^2``; the estimate is
  ``inf (E|S_n|^3 - E|S|^3) / sum (a_i^2 - 1/n)^2``, the largest ``C`` the samples allow.

A sample whose margin is below ``-tol`` is a violation candidate; it is only
counted as stable after a log-space recomputation reproduces it to within 1e-12.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Iterator

from tqdm import tqdm

from khl.constants import even_integer_constant
from khl.dist_core import (
    CoefficientVector,
    MomentQuery,
    absolute_moment,
    build_distribution,
    diagonal_moment,
    gaussian_abs_moment,
)
from khl.errors import DomainError
from khl.explorer.sampling import SearchConfig, config_vector
from khl.settings import DEFAULT_TOL

logger = logging.getLogger(__name__)

CONJECTURES = ("gauss", "crit")
CRIT_SKIP = 1e-16
REVERIFY_TOL = 1e-12


@dataclass(frozen=True)
class SampleResult:
    index: int
    n: int
    margin: float
    ratio: float | None
    squares: tuple[float, ...] = ()

    @property
    def skipped(self) -> bool:
        return self.ratio is None


@dataclass
class SearchOutcome:
    conjecture: str
    p: float
    best_constant_estimate: float
    worst_vector: CoefficientVector | None
    worst_margin: float
    samples_run: int
    violations: int
    stable_violations: int = 0
    worst_index: int | None = None
    reverified_margin: float | None = None
    skipped: int = 0
    per_n: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["worst_vector"] = list(self.worst_vector.coeffs) if self.worst_vector is not None else None
        data["per_n"] = {str(n): row for n, row in sorted(self.per_n.items())}
        return data


def _scale(*values: float) -> float:
    return max(1.0, *(abs(v) for v in values))


def _gauss_margin(a: CoefficientVector, p: float, mode: str = "standard") -> tuple[float, float, float]:
    """``(margin, gap, fourth_power_sum)`` for the conjectured Gaussian constant."""
    moment = absolute_moment(build_distribution(a), MomentQuery(p, mode))
    gaussian = gaussian_abs_moment(p)
    fourth = a.fourth_power_sum
    margin = gaussian - even_integer_constant(p) * fourth - moment
    return margin, gaussian - moment, fourth


def _crit_margin(a: CoefficientVector, mode: str = "standard") -> tuple[float, float, float]:
    """``(margin, gap, distance)``; the margin is the diagonal gap itself, negative only if Schur order fails."""
    gap = diagonal_moment(a.n, 3.0) - absolute_moment(build_distribution(a), MomentQuery(3.0, mode))
    return gap, gap, a.diagonal_distance()


def evaluate_sample(conjecture: str, cfg: SearchConfig, index: int) -> SampleResult:
    a = config_vector(cfg, index)
    if conjecture == "gauss":
        margin, gap, fourth = _gauss_margin(a, cfg.p)
        return SampleResult(index, a.n, margin, gap / fourth, a.squares)
    margin, gap, distance = _crit_margin(a)
    ratio = None if distance < CRIT_SKIP else gap / distance
    return SampleResult(index, a.n, margin, ratio, a.squares)


def iter_samples(
    conjecture: str,
    cfg: SearchConfig,
    jobs: int = 1,
    progress: bool = False,
) -> Iterator[SampleResult]:
    """Evaluate every sample index of ``cfg``; results are yielded in index order."""
    if conjecture not in CONJECTURES:
        raise ValueError(f"Unknown conjecture: {conjecture}")
    worker = partial(evaluate_sample, conjecture, cfg)
    indices = range(cfg.samples)
    if jobs <= 1:
        yield from tqdm(map(worker, indices), total=cfg.samples, disable=not progress)
        return
    chunksize = max(1, cfg.samples // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from tqdm(pool.map(worker, indices, chunksize=chunksize), total=cfg.samples, disable=not progress)


def _violation_scale(conjecture: str, p: float, n: int) -> float:
    return _scale(gaussian_abs_moment(p) if conjecture == "gauss" else diagonal_moment(n, 3.0))


def _reverify(conjecture: str, cfg: SearchConfig, sample: SampleResult, tol: float) -> tuple[bool, float]:
    """Recompute in log-space; stable when the violation persists and both evaluations agree."""
    a = config_vector(cfg, sample.index)
    if conjecture == "gauss":
        margin = _gauss_margin(a, cfg.p, "log-space")[0]
    else:
        margin = _crit_margin(a, "log-space")[0]
    scale = _violation_scale(conjecture, cfg.p, a.n)
    stable = margin < -tol * scale and abs(margin - sample.margin) <= REVERIFY_TOL * scale
    return stable, margin


def _search(
    conjecture: str,
    cfg: SearchConfig,
    jobs: int,
    tol: float,
    progress: bool,
    on_sample: Callable[[SampleResult], None] | None,
) -> SearchOutcome:
    best_ratio = math.inf
    worst: SampleResult | None = None
    violations = stable = skipped = 0
    per_n: dict[int, dict] = {}

    for sample in iter_samples(conjecture, cfg, jobs, progress):
        if on_sample is not None:
            on_sample(sample)
        row = per_n.setdefault(sample.n, {"samples": 0, "min_margin": math.inf, "constant_estimate": math.inf})
        row["samples"] += 1
        row["min_margin"] = min(row["min_margin"], sample.margin)
        if sample.skipped:
            skipped += 1
        else:
            row["constant_estimate"] = min(row["constant_estimate"], sample.ratio)
            best_ratio = min(best_ratio, sample.ratio)
        key = sample.margin if conjecture == "gauss" else sample.ratio
        if key is not None:
            current = None if worst is None else (worst.margin if conjecture == "gauss" else worst.ratio)
            if current is None or key < current:
                worst = sample
        if sample.margin < -tol * _violation_scale(conjecture, cfg.p, sample.n):
            violations += 1
            is_stable, rechecked = _reverify(conjecture, cfg, sample, tol)
            if is_stable:
                stable += 1
                logger.warning("Stable violation at index %s (n=%s): margin %s", sample.index, sample.n, rechecked)

    for row in per_n.values():
        if math.isinf(row["constant_estimate"]):
            row["constant_estimate"] = None

    reverified = None
    if worst is not None and worst.margin < -tol * _violation_scale(conjecture, cfg.p, worst.n):
        reverified = _reverify(conjecture, cfg, worst, tol)[1]
    logger.info(
        "Search %s at p=%s: %s samples, %s violations (%s stable)", conjecture, cfg.p, cfg.samples, violations, stable
    )
    return SearchOutcome(
        conjecture=conjecture,
        p=cfg.p,
        best_constant_estimate=best_ratio if math.isfinite(best_ratio) else float("nan"),
        worst_vector=CoefficientVector.from_squares(worst.squares) if worst is not None else None,
        worst_margin=worst.margin if worst is not None else float("nan"),
        samples_run=cfg.samples,
        violations=violations,
        stable_violations=stable,
        worst_index=worst.index if worst is not None else None,
        reverified_margin=reverified,
        skipped=skipped,
        per_n=per_n,
    )


def search_conjecture_gauss(
    cfg: SearchConfig,
    jobs: int = 1,
    tol: float = DEFAULT_TOL,
    progress: bool = False,
    on_sample: Callable[[SampleResult], None] | None = None,
) -> SearchOutcome:
    return _search("gauss", cfg, jobs, tol, progress, on_sample)


def search_conjecture_crit(
    cfg: SearchConfig,
    jobs: int = 1,
    tol: float = DEFAULT_TOL,
    progress: bool = False,
    on_sample: Callable[[SampleResult], None] | None = None,
) -> SearchOutcome:
    if cfg.p != 3:
        raise DomainError(f"the critical conjecture is stated at p = 3, got {cfg.p}")
    return _search("crit", cfg, jobs, tol, progress, on_sample)


def build_search(conjecture: str) -> Callable[..., SearchOutcome]:
    searches = {
        "gauss": search_conjecture_gauss,
        "crit": search_conjecture_crit,
    }
    try:
        return searches[conjecture]
    except KeyError as exc:
        raise ValueError(f"Unknown conjecture: {conjecture}") from exc
