"""Small-ball bounds for ``S`` and ``S + bG``."""

from __future__ import annotations

import math

import numpy as np

from khl.constants import ONE_MINUS_TWO_OVER_E
from khl.dist_core import CoefficientVector, mixed_interval_probability, sign_sum_distribution
from khl.errors import HypothesisViolated
from khl.settings import DEFAULT_TOL
from khl.verifiers.report import DeficitReport, combine_checks, make_report

SMALL_BALL_C = 3.0 / 16.0
WIDE_LEVEL = 2.0


def verify_concentration(
    a: CoefficientVector,
    gaussian_mass: float = 0.0,
    level: float | None = None,
    tol: float = DEFAULT_TOL,
) -> DeficitReport:
    """``P(|T| <= 2) >= 1 - 2/e`` and ``P(|T| <= r) >= 3r/16`` for ``T = sqrt(1 - b^2) S + bG``.

    The small-ball radius ``r`` is ``max(sqrt(1 - b^2) a_1, level)`` and must not exceed 1.
    """
    b = float(gaussian_mass)
    if not 0.0 <= b <= 1.0:
        raise HypothesisViolated(f"Gaussian mass must lie in [0, 1], got {b}")
    scale = math.sqrt(max(1.0 - b * b, 0.0))
    coeffs = scale * np.asarray(a.coeffs)
    radius = max(float(coeffs[0]), level or 0.0)
    if radius > 1.0 + 1e-12:
        raise HypothesisViolated(f"small-ball radius {radius} exceeds 1")
    d = sign_sum_distribution(coeffs)
    wide = mixed_interval_probability(d, b, WIDE_LEVEL)
    narrow = mixed_interval_probability(d, b, radius)
    margin, ok, detail = combine_checks(
        {
            "wide": (ONE_MINUS_TWO_OVER_E, wide),
            "small_ball": (SMALL_BALL_C * radius, narrow),
        },
        tol,
    )
    detail["radius"] = radius
    detail["gaussian_mass"] = b
    return make_report(
        "prop_conc",
        lhs=SMALL_BALL_C * radius,
        rhs=narrow,
        n=a.n,
        deficit_term=radius,
        constant_used=SMALL_BALL_C,
        margin=margin,
        tol=tol,
        checks_ok=ok,
        detail=detail,
    )
