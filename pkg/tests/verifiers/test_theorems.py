import math

import pytest

from khl.constants import gauss_constant
from khl.dist_core import CoefficientVector, diagonal_moment, gaussian_abs_moment
from khl.errors import DimensionTooLarge, DomainError, NotComparable
from khl.schur_order import SquaresVector
from khl.verifiers.theorems import (
    crit_deficit,
    diag_moment_floor,
    verify_crit_stability,
    verify_deficit_monotonicity,
    verify_diag_stability,
    verify_gauss_stability,
    verify_schur_monotonicity,
)
from tests.conftest import random_vectors


def test_gauss_single_coordinate_uses_full_constant():
    report = verify_gauss_stability(CoefficientVector((1.0,)), 3.0)
    assert report.detail["branch"] == "full"
    assert report.constant_used == gauss_constant(3.0)
    assert report.lhs == pytest.approx(1.0)
    assert report.rhs == pytest.approx(gaussian_abs_moment(3.0) - gauss_constant(3.0))
    assert report.passed


def test_gauss_capped_branch():
    report = verify_gauss_stability(CoefficientVector.from_squares((0.9, 0.1)), 4.0)
    assert report.detail["branch"] == "capped"
    assert report.constant_used == 0.5
    assert report.lhs == pytest.approx(1.36)
    assert report.rhs == pytest.approx(3.0 - 0.5 * 0.82)
    assert report.detail["capped_squares"] == pytest.approx([0.5, 0.5])
    assert report.detail["capped_moment"] == pytest.approx(2.0)
    assert report.detail["cap_steps"] == 1
    assert report.passed


def test_gauss_is_tight_at_four():
    # E S^4 = 3 - 2 sum a^4, so the full-branch margin vanishes.
    for a in random_vectors(30, 8, seed=5, n_min=2):
        if a.squares[0] > 0.5:
            continue
        report = verify_gauss_stability(a, 4.0)
        assert report.margin == pytest.approx(0.0, abs=1e-12)
        assert report.passed


@pytest.mark.parametrize("p", [3.0, 3.5, 4.5, 5.0, 6.0, 7.25])
def test_gauss_random(p, vectors):
    for a in vectors:
        assert verify_gauss_stability(a, p).passed


def test_gauss_rejects_small_p():
    with pytest.raises(DomainError):
        verify_gauss_stability(CoefficientVector((1.0,)), 2.5)


def test_diag_margin_at_four():
    a = CoefficientVector.from_squares((0.5, 0.3, 0.2))
    report = verify_diag_stability(a, 4.0)
    assert report.detail["branch"] == "direct"
    assert report.constant_used == pytest.approx(8 / 25)
    # The exact gap at p = 4 is 2 sum (a_i^2 - 1/n)^2.
    assert report.margin == pytest.approx((2.0 - 8 / 25) * report.deficit_term)


def test_diag_branches():
    assert verify_diag_stability(CoefficientVector.from_squares((0.7, 0.3)), 5.0).detail["branch"] == "n<=2"
    capped = verify_diag_stability(CoefficientVector.from_squares((0.8, 0.1, 0.1)), 5.0)
    assert capped.detail["branch"] == "capped"
    assert capped.detail["capped_squares"][0] == pytest.approx(0.9 - 1 / 3)
    assert capped.passed


@pytest.mark.parametrize("p", [3.25, 3.5, 4.0, 4.5, 5.0, 6.0, 8.0])
def test_diag_random(p, vectors):
    for a in vectors:
        assert verify_diag_stability(a, p).passed


def test_diag_moment_floor():
    a = CoefficientVector.from_squares((0.5, 0.3, 0.2))
    assert diag_moment_floor(a, 4.0) == 1.0
    assert diag_moment_floor(a, 6.0) == pytest.approx(1.0 - 0.5 - 1 / 3)
    spiky = CoefficientVector.from_squares((0.99, 0.01))
    assert diag_moment_floor(spiky, 6.0) == pytest.approx(0.1)


def test_diag_rejects_p_three():
    with pytest.raises(DomainError):
        verify_diag_stability(CoefficientVector.from_squares((0.5, 0.5)), 3.0)


def test_crit_two_coordinates():
    a = CoefficientVector.from_squares((0.75, 0.25))
    assert crit_deficit(a) == pytest.approx(0.025)
    report = verify_crit_stability(a)
    assert report.lhs == pytest.approx(1.299, abs=1e-3)
    assert report.rhs == pytest.approx(math.sqrt(2.0) - 0.025 / 64)
    assert report.passed


def test_crit_deficit_vanishes_on_diagonal():
    assert crit_deficit(CoefficientVector.diagonal(5)) == 0.0


def test_crit_random(vectors):
    for a in vectors:
        assert verify_crit_stability(a).passed


def test_schur_diagonal_against_single_spike():
    x = SquaresVector.diagonal(3)
    y = SquaresVector((1.0, 0.0, 0.0))
    report = verify_schur_monotonicity(x, y, 3.0)
    assert report.lhs == pytest.approx(1.0)
    assert report.rhs == pytest.approx(diagonal_moment(3, 3.0))
    assert report.passed
    assert report.detail["swapped"] is False
    assert verify_schur_monotonicity(y, x, 3.0).detail["swapped"] is True


def test_schur_pads_shorter_vector():
    report = verify_schur_monotonicity(SquaresVector.diagonal(4), SquaresVector((0.5, 0.5)), 4.0)
    assert report.n == 4
    assert report.rhs == pytest.approx(diagonal_moment(4, 4.0))
    assert report.passed


def test_schur_errors():
    with pytest.raises(NotComparable):
        verify_schur_monotonicity(SquaresVector((0.6, 0.2, 0.2)), SquaresVector((0.5, 0.5, 0.0)), 3.0)
    with pytest.raises(DomainError):
        verify_schur_monotonicity(SquaresVector.diagonal(2), SquaresVector((1.0,)), 2.0)
    with pytest.raises(DimensionTooLarge):
        verify_schur_monotonicity(SquaresVector.diagonal(21), SquaresVector((1.0,)), 3.0)


def test_deficit_monotonicity():
    report = verify_deficit_monotonicity(SquaresVector((0.4, 0.3, 0.3)), SquaresVector((0.7, 0.2, 0.1)))
    assert report.lhs == pytest.approx(0.34)
    assert report.rhs == pytest.approx(0.54)
    assert report.passed
