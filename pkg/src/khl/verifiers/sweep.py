"""
Claim registry and seeded batch sweeps.

Usage::

    from khl.verifiers.sweep import run_sweep, sweep_summary

    reports = run_sweep("gauss", p=3.0, count=1000, seed=7, jobs=4)
    sweep_summary(reports)
    # -> {"claim": "gauss", "count": 1000, "failed": 0, "worst_margin": ..., ...}

Instance ``index`` has ``n = n_min + index % span`` and cycles the sampling
strategy every ``span`` instances, so every dimension sees every strategy.
Instances are built before any work is scheduled and results come back in index
order, so the output does not depend on ``jobs``.

To add a claim, write a module-level ``_run_<name>(instance, tol)`` and register
it in the ``runners`` dict inside :func:`build_claim`.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from tqdm import tqdm

from khl.dist_core import CoefficientVector
from khl.errors import DomainError, KhlError
from khl.explorer.sampling import sample_squares, simplex_grid
from khl.schur_order import SquaresVector, cap_largest, final_vector, majorizes, t_transform
from khl.settings import DEFAULT_TOL
from khl.verifiers.asymptotics import verify_binomial_moment, verify_doubling, verify_optimality_witness
from khl.verifiers.concentration import verify_concentration
from khl.verifiers.lemmas import (
    ExchangeSplit,
    verify_exchange_step,
    verify_gauss_chain,
    verify_n2_closed_form,
    verify_procedure_composition,
    verify_t_step,
)
from khl.verifiers.report import DeficitReport, make_report
from khl.verifiers.theorems import (
    verify_crit_stability,
    verify_diag_stability,
    verify_gauss_stability,
    verify_schur_monotonicity,
)

logger = logging.getLogger(__name__)

SWEEP_STRATEGIES = ("simplex", "near_diagonal", "spiky")
SCALAR_CLAIMS = ("doubling", "binom", "optimality")
CLAIMS = (
    "gauss",
    "diag",
    "crit",
    "schur",
    "exchange",
    "tstep",
    "compose",
    "doubling",
    "binom",
    "conc",
    "n2",
    "chain",
    "optimality",
)


@dataclass(frozen=True)
class SweepInstance:
    claim: str
    p: float
    index: int
    n: int
    squares: tuple[float, ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def vector(self) -> CoefficientVector:
        return CoefficientVector.from_squares(self.squares)


def _capped(squares: np.ndarray, cap: float) -> tuple[float, ...]:
    x = SquaresVector.normalized(squares)
    if x.squares[0] <= cap:
        return x.squares
    return final_vector(x, cap_largest(x, cap)).squares


def _min_n(claim: str, p: float) -> int:
    if claim in ("exchange", "chain", "schur"):
        return 2
    if claim in ("tstep", "compose"):
        return 2 if p == 3 else 3
    return 1


def _prepare(claim: str, p: float, n: int, squares: np.ndarray, rng: np.random.Generator) -> tuple[tuple, dict]:
    """Bring a sampled vector inside the claim's hypotheses and draw any auxiliary inputs."""
    if claim in ("exchange", "chain"):
        capped = _capped(squares, 0.5)
        extra = {"i": int(rng.integers(n))} if claim == "exchange" else {}
        return capped, extra
    if claim in ("tstep", "compose") and p > 4:
        return _capped(squares, 0.9 - 1.0 / n), {}
    if claim == "schur":
        y = SquaresVector.normalized(squares)
        j, k = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
        x = t_transform(y, j, k, float(rng.uniform()))
        return y.squares, {"x": x.squares}
    if claim == "conc":
        b = float(rng.uniform(0.0, 0.9)) if rng.uniform() < 0.5 else 0.0
        top = (1.0 - b * b) ** 0.5 * float(np.sqrt(squares.max() / squares.sum()))
        return SquaresVector.normalized(squares).squares, {"b": b, "level": float(rng.uniform(top, 1.0))}
    return SquaresVector.normalized(squares).squares, {}


def sweep_instances(
    claim: str,
    p: float,
    count: int,
    seed: int,
    n_min: int = 1,
    n_max: int = 12,
) -> list[SweepInstance]:
    build_claim(claim)
    n_min = max(n_min, _min_n(claim, p))
    if n_max < n_min:
        raise DomainError(f"claim {claim} at p = {p} needs n >= {n_min}, but n_max = {n_max}")
    span = n_max - n_min + 1
    instances = []
    for index in range(count):
        n = n_min + index % span
        rng = np.random.default_rng([seed, index, 1])
        if claim == "n2":
            n, squares, extra = 2, (), {"x": float(rng.uniform(0.0, 0.5))}
        elif claim in SCALAR_CLAIMS:
            squares, extra = (), {}
        else:
            strategy = SWEEP_STRATEGIES[(index // span) % len(SWEEP_STRATEGIES)]
            squares, extra = _prepare(claim, p, n, sample_squares(strategy, n, seed, index), rng)
            extra = {"strategy": strategy, **extra}
        instances.append(SweepInstance(claim=claim, p=p, index=index, n=n, squares=squares, extra=extra))
    return instances


def _run_gauss(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_gauss_stability(instance.vector, instance.p, tol)


def _run_diag(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_diag_stability(instance.vector, instance.p, tol)


def _run_crit(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_crit_stability(instance.vector, tol)


def _run_schur(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_schur_monotonicity(SquaresVector(instance.extra["x"]), SquaresVector(instance.squares), instance.p, tol)


def _run_exchange(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_exchange_step(ExchangeSplit(instance.vector, instance.extra["i"]), instance.p, tol)


def _run_tstep(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_t_step(instance.vector, instance.p, tol)


def _run_compose(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_procedure_composition(instance.vector, instance.p, tol)


def _run_doubling(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_doubling(instance.n, instance.p, tol)


def _run_binom(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_binomial_moment(instance.n, instance.p, tol)


def _run_conc(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_concentration(instance.vector, instance.extra["b"], instance.extra["level"], tol)


def _run_n2(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_n2_closed_form(instance.extra["x"], instance.p, tol)


def _run_chain(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_gauss_chain(instance.vector, instance.p, tol)


def _run_optimality(instance: SweepInstance, tol: float) -> DeficitReport:
    return verify_optimality_witness(instance.n, instance.p, tol)


def build_claim(name: str) -> Callable[[SweepInstance, float], DeficitReport]:
    runners = {
        "gauss": _run_gauss,
        "diag": _run_diag,
        "crit": _run_crit,
        "schur": _run_schur,
        "exchange": _run_exchange,
        "tstep": _run_tstep,
        "compose": _run_compose,
        "doubling": _run_doubling,
        "binom": _run_binom,
        "conc": _run_conc,
        "n2": _run_n2,
        "chain": _run_chain,
        "optimality": _run_optimality,
    }
    try:
        return runners[name]
    except KeyError as exc:
        raise ValueError(f"Unknown claim: {name}") from exc


def run_instance(instance: SweepInstance, tol: float = DEFAULT_TOL) -> DeficitReport:
    """Run one instance; a library error becomes a failed report instead of stopping the sweep."""
    try:
        return build_claim(instance.claim)(instance, tol)
    except KhlError as exc:
        logger.error("Error in %s instance %s (n=%s): %s", instance.claim, instance.index, instance.n, exc)
        return make_report(
            instance.claim,
            lhs=float("nan"),
            rhs=float("nan"),
            n=instance.n,
            p=instance.p,
            margin=float("-inf"),
            checks_ok=False,
            detail={"error": str(exc), "index": instance.index},
        )


def run_instances(
    instances: list[SweepInstance],
    tol: float = DEFAULT_TOL,
    jobs: int = 1,
    progress: bool = True,
) -> list[DeficitReport]:
    worker = partial(run_instance, tol=tol)
    if jobs <= 1 or len(instances) <= 1:
        return [worker(instance) for instance in tqdm(instances, disable=not progress)]
    chunksize = max(1, len(instances) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(tqdm(pool.map(worker, instances, chunksize=chunksize), total=len(instances), disable=not progress))


def run_sweep(
    claim: str,
    p: float,
    count: int,
    seed: int,
    n_min: int = 1,
    n_max: int = 12,
    tol: float = DEFAULT_TOL,
    jobs: int = 1,
    progress: bool = True,
) -> list[DeficitReport]:
    instances = sweep_instances(claim, p, count, seed, n_min, n_max)
    logger.info("Sweeping %s at p=%s: %s instances on %s workers", claim, p, len(instances), jobs)
    reports = run_instances(instances, tol, jobs, progress)
    failed = sum(not r.passed for r in reports)
    if failed:
        logger.warning("%s of %s %s instances failed", failed, len(reports), claim)
    return reports


def sweep_summary(reports: list[DeficitReport]) -> dict:
    """Counts plus the worst margin; ties go to the lowest index."""
    if not reports:
        return {"claim": None, "count": 0, "passed": 0, "failed": 0, "worst_margin": None, "worst_index": None}
    worst_index = min(range(len(reports)), key=lambda i: (reports[i].margin, i))
    worst = reports[worst_index]
    failed = sum(not r.passed for r in reports)
    return {
        "claim": reports[0].claim_id,
        "count": len(reports),
        "passed": len(reports) - failed,
        "failed": failed,
        "worst_margin": worst.margin,
        "worst_index": worst_index,
        "worst_n": worst.n,
    }


def schur_grid_pairs(n: int, step: float) -> list[tuple[SquaresVector, SquaresVector]]:
    """All ordered pairs ``(x, y)`` of distinct grid points with ``x ≺ y``."""
    points = simplex_grid(n, step)
    return [(x, y) for x in points for y in points if x != y and majorizes(x, y)]


def schur_grid_instances(n: int, step: float, p: float) -> list[SweepInstance]:
    return [
        SweepInstance(claim="schur", p=p, index=index, n=n, squares=y.squares, extra={"x": x.squares})
        for index, (x, y) in enumerate(schur_grid_pairs(n, step))
    ]
