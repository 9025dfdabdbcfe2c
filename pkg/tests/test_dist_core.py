import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from khl.dist_core import (
    CoefficientVector,
    MomentQuery,
    absolute_moment,
    binomial_moment,
    build_distribution,
    diagonal_moment,
    distribution_to_json,
    gaussian_abs_moment,
    interval_probability,
    mixed_abs_moment,
    mixed_interval_probability,
    sign_sum_distribution,
)
from khl.errors import DimensionTooLarge, DomainError, InvalidCoefficients, InvalidMomentQuery

from tests.conftest import random_vectors
from tests.helpers.oracles import brute_force_interval, brute_force_moment


def test_coefficient_vector_sorts_drops_signs_and_normalizes():
    a = CoefficientVector((1.0, -3.0))
    assert a.coeffs == pytest.approx((3 / math.sqrt(10), 1 / math.sqrt(10)))
    assert a.n == 2
    assert math.fsum(a.squares) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [(), (0.0, 0.0), (1.0, float("nan")), (1.0, float("inf"))])
def test_coefficient_vector_rejects_bad_input(bad):
    with pytest.raises(InvalidCoefficients):
        CoefficientVector(bad)


def test_from_squares_and_diagonal():
    a = CoefficientVector.from_squares((0.75, 0.25))
    assert a.coeffs == pytest.approx((math.sqrt(0.75), 0.5))
    assert CoefficientVector.diagonal(4).coeffs == pytest.approx((0.5,) * 4)
    with pytest.raises(InvalidCoefficients):
        CoefficientVector.from_squares((0.5, -0.5))


def test_fourth_power_sum_and_diagonal_distance():
    a = CoefficientVector.from_squares((0.5, 0.3, 0.2))
    assert a.fourth_power_sum == pytest.approx(0.38)
    assert a.diagonal_distance() == pytest.approx(0.38 - 1 / 3)


def test_two_equal_coefficients_have_three_atoms():
    d = build_distribution(CoefficientVector((1.0, 1.0)))
    assert d.atoms == pytest.approx([(0.0, 0.5), (math.sqrt(2), 0.25)])
    assert absolute_moment(d, 4) == pytest.approx(2.0)


def test_empty_sign_sum_is_point_mass():
    d = sign_sum_distribution(())
    assert distribution_to_json(d) == [[0.0, 1.0]]
    assert absolute_moment(d, 3) == 0.0


def test_dimension_cap():
    with pytest.raises(DimensionTooLarge):
        build_distribution(CoefficientVector((1.0,) * 31))


def test_fourth_moment_identity():
    for a in random_vectors(200, 12, seed=11):
        moment = absolute_moment(build_distribution(a), 4)
        assert abs(moment - (3 - 2 * a.fourth_power_sum)) <= 1e-10


def test_second_moment_is_one():
    for a in random_vectors(200, 12, seed=13):
        assert abs(absolute_moment(build_distribution(a), 2) - 1.0) <= 1e-12


@given(st.lists(st.floats(min_value=0.05, max_value=3.0), min_size=1, max_size=9))
@settings(max_examples=60, deadline=None)
def test_lp_norms_increase_with_p(values):
    d = build_distribution(CoefficientVector(tuple(values)))
    norms = [absolute_moment(d, p) ** (1.0 / p) for p in (0.5, 1.0, 2.0, 3.0, 3.5, 4.0, 6.0, 10.0)]
    for lower, upper in zip(norms, norms[1:]):
        assert lower <= upper * (1 + 1e-12)


@pytest.mark.parametrize("p", [0.5, 3.0, 3.5, 5.0])
def test_moments_match_enumeration(p):
    for a in random_vectors(15, 10, seed=5):
        assert absolute_moment(build_distribution(a), p) == pytest.approx(brute_force_moment(a.coeffs, p), rel=1e-12)


def test_zero_moment_counts_nonzero_mass():
    d = build_distribution(CoefficientVector((1.0, 1.0)))
    assert absolute_moment(d, 0) == pytest.approx(0.5)


@given(st.lists(st.floats(min_value=0.1, max_value=2.0), min_size=1, max_size=7), st.randoms())
@settings(max_examples=40, deadline=None)
def test_moment_ignores_order_and_signs(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    flipped = [-v if rnd.random() < 0.5 else v for v in shuffled]
    base = absolute_moment(build_distribution(CoefficientVector(tuple(values))), 3.5)
    other = absolute_moment(build_distribution(CoefficientVector(tuple(flipped))), 3.5)
    assert other == pytest.approx(base, rel=1e-12)


def test_moment_query_validation():
    with pytest.raises(InvalidMomentQuery):
        MomentQuery(65.0)
    with pytest.raises(InvalidMomentQuery, match="Unknown precision mode"):
        MomentQuery(3.0, mode="fast")
    with pytest.raises(InvalidMomentQuery):
        MomentQuery(-1.0)
    assert MomentQuery(100.0, mode="log-space").p == 100.0


def test_log_space_agrees_with_standard():
    d = build_distribution(CoefficientVector.from_squares((0.4, 0.3, 0.2, 0.1)))
    assert absolute_moment(d, MomentQuery(10.0, "log-space")) == pytest.approx(absolute_moment(d, 10.0), rel=1e-12)


def test_diagonal_moment_values():
    assert diagonal_moment(4, 3) == pytest.approx(1.5)
    assert diagonal_moment(1, 7.3) == pytest.approx(1.0)
    assert diagonal_moment(10, 4) == pytest.approx(3 - 2 / 10, rel=1e-12)
    assert diagonal_moment(60, 4) == pytest.approx(3 - 2 / 60, rel=1e-10)
    assert diagonal_moment(1024, 6) == pytest.approx(15 - 30 / 1024 + 16 / 1024**2, rel=1e-10)


def test_diagonal_moment_matches_distribution():
    a = CoefficientVector.diagonal(7)
    assert diagonal_moment(7, 3.3) == pytest.approx(absolute_moment(build_distribution(a), 3.3), rel=1e-12)


def test_diagonal_moment_domain():
    with pytest.raises(DomainError):
        diagonal_moment(0, 3)


def test_binomial_moment():
    assert binomial_moment(1, 2) == pytest.approx(0.5)
    assert binomial_moment(2, 2) == pytest.approx(1.5)
    assert binomial_moment(100, 1) == pytest.approx(50.0, rel=1e-12)
    assert binomial_moment(200, 1) == pytest.approx(100.0, rel=1e-10)


def test_gaussian_abs_moment():
    assert gaussian_abs_moment(2) == pytest.approx(1.0)
    assert gaussian_abs_moment(3) == pytest.approx(2 * math.sqrt(2 / math.pi))
    assert gaussian_abs_moment(4) == pytest.approx(3.0)
    assert gaussian_abs_moment(6) == pytest.approx(15.0)


def test_mixed_moment_of_pure_gaussian():
    d = sign_sum_distribution(())
    assert mixed_abs_moment(d, 0.5, 3.0) == pytest.approx(0.125 * gaussian_abs_moment(3.0), rel=1e-12)


def test_mixed_moment_fourth_power_identity():
    d = sign_sum_distribution((1 / math.sqrt(2),))
    assert mixed_abs_moment(d, 1 / math.sqrt(2), 4.0) == pytest.approx(2.5, rel=1e-10)


def test_mixed_moment_far_kink_uses_exact_polynomial():
    d = sign_sum_distribution((10.0,))
    assert mixed_abs_moment(d, 0.1, 4.0) == pytest.approx(10000 + 6 * 100 * 0.01 + 3 * 1e-4, rel=1e-12)


def test_mixed_moment_with_kink_inside_bulk():
    d = sign_sum_distribution((0.5,))
    expected, _ = integrate.quad(
        lambda g: abs(0.5 + g) ** 3 * norm.pdf(g), -40, 40, points=[-0.5], epsabs=0, epsrel=1e-13, limit=200
    )
    assert mixed_abs_moment(d, 1.0, 3.0) == pytest.approx(expected, rel=1e-9)


def test_mixed_moment_edge_cases():
    d = build_distribution(CoefficientVector((1.0, 1.0)))
    assert mixed_abs_moment(d, 0.0, 3.0) == absolute_moment(d, 3.0)
    with pytest.raises(DomainError):
        mixed_abs_moment(d, -0.1, 3.0)


def test_interval_probability():
    d = build_distribution(CoefficientVector((0.5, 0.5, 0.5, 0.5)))
    assert interval_probability(d, 0.5) == pytest.approx(0.375)
    assert interval_probability(d, 1.0) == pytest.approx(0.875)
    assert interval_probability(d, 2.0) == pytest.approx(1.0)


def test_interval_probability_matches_enumeration():
    for a in random_vectors(10, 9, seed=2):
        d = build_distribution(a)
        for level in (0.1, 0.5, 1.0):
            assert interval_probability(d, level) == pytest.approx(brute_force_interval(a.coeffs, level))


def test_mixed_interval_probability():
    point = sign_sum_distribution(())
    assert mixed_interval_probability(point, 1.0, 1.0) == pytest.approx(2 * norm.cdf(1.0) - 1)
    d = build_distribution(CoefficientVector((1.0, 1.0)))
    assert mixed_interval_probability(d, 0.0, 0.1) == pytest.approx(0.5)
    assert 0.0 <= mixed_interval_probability(d, 0.3, 0.5) <= 1.0


def test_distribution_is_read_only():
    d = build_distribution(CoefficientVector((1.0, 2.0)))
    with pytest.raises(ValueError):
        d.values[0] = 3.0
    assert np.all(np.diff(d.values) > 0)
