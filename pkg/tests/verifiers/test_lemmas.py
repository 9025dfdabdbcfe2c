import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from khl.dist_core import CoefficientVector
from khl.errors import DomainError, HypothesisViolated, IndexOutOfRange
from khl.verifiers.lemmas import (
    ExchangeSplit,
    n2_constant,
    verify_exchange_step,
    verify_gauss_chain,
    verify_n2_closed_form,
    verify_procedure_composition,
    verify_step_identity,
    verify_t_step,
)
from tests.conftest import random_vectors


def _balanced(count, seed):
    """Random vectors with a_1^2 <= 1/2."""
    return [a for a in random_vectors(count, 7, seed=seed, n_min=2) if a.squares[0] <= 0.5]


def test_exchange_split_defaults():
    a = CoefficientVector.from_squares((0.4, 0.3, 0.2, 0.1))
    split = ExchangeSplit(a, 2)
    assert split.gaussian_mass == pytest.approx(math.sqrt(0.7))
    assert split.coefficient == pytest.approx(math.sqrt(0.2))
    assert split.rest == pytest.approx((math.sqrt(0.1),))
    assert ExchangeSplit(a, 0).gaussian_mass == 0.0


def test_exchange_split_errors():
    a = CoefficientVector.from_squares((0.5, 0.5))
    with pytest.raises(IndexOutOfRange):
        ExchangeSplit(a, 2)
    with pytest.raises(DomainError):
        ExchangeSplit(a, 1, gaussian_mass=0.2)


def test_exchange_is_tight_at_four():
    # E|X + cG|^4 - E|X + c eps|^4 = 2 c^4 = C_4 c^4.
    a = CoefficientVector.from_squares((0.4, 0.3, 0.2, 0.1))
    for i in range(a.n):
        report = verify_exchange_step(ExchangeSplit(a, i), 4.0)
        assert report.lhs == pytest.approx(2.0 * a.coeffs[i] ** 4, rel=1e-8)
        assert report.margin == pytest.approx(0.0, abs=1e-9)
        assert report.passed


@pytest.mark.parametrize("p", [3.0, 3.5, 5.0])
def test_exchange_random(p):
    for a in _balanced(12, seed=8):
        for i in range(a.n):
            assert verify_exchange_step(ExchangeSplit(a, i), p).passed


def test_exchange_needs_small_coefficient():
    a = CoefficientVector.from_squares((0.9, 0.1))
    with pytest.raises(HypothesisViolated):
        verify_exchange_step(ExchangeSplit(a, 0), 3.0)
    with pytest.raises(DomainError):
        verify_exchange_step(ExchangeSplit(a, 1), 2.0)


def test_chain_telescopes_at_four():
    a = CoefficientVector.from_squares((0.4, 0.3, 0.2, 0.1))
    report = verify_gauss_chain(a, 4.0)
    assert report.lhs == pytest.approx(2.0 * a.fourth_power_sum, rel=1e-8)
    assert report.rhs == pytest.approx(2.0 * a.fourth_power_sum, rel=1e-12)
    assert report.detail["telescoped"]
    assert len(report.detail["step_margins"]) == 4
    assert report.passed


@pytest.mark.parametrize("p", [3.0, 4.5])
def test_chain_random(p):
    for a in _balanced(8, seed=9):
        assert verify_gauss_chain(a, p).passed


def test_chain_needs_balanced_vector():
    with pytest.raises(HypothesisViolated):
        verify_gauss_chain(CoefficientVector.from_squares((0.6, 0.4)), 3.0)


def test_t_step_equality_at_four():
    report = verify_t_step(CoefficientVector.from_squares((0.5, 0.3, 0.2)), 4.0)
    assert report.lhs == pytest.approx(0.0888888889)
    assert report.rhs == pytest.approx(0.0888888889)
    assert report.margin == pytest.approx(0.0, abs=1e-12)
    assert report.detail["mu"] == pytest.approx((1 / 3) / 0.7)
    assert report.detail["mu0"] == pytest.approx(0.2 / 0.7)
    assert report.detail["a2"] == pytest.approx(0.7)
    assert report.passed


def test_t_step_records_middle_moment():
    report = verify_t_step(CoefficientVector.from_squares((0.4, 0.3, 0.2, 0.1)), 6.0)
    # E|S_mid|^2 is the mass of the middle coordinates.
    assert report.detail["middle_moment"] == pytest.approx(0.5)
    assert report.passed


@pytest.mark.parametrize("p", [3.0, 3.5, 4.0, 5.0])
def test_t_step_random(p):
    n_min = 2 if p == 3 else 3
    for a in random_vectors(25, 8, seed=10, n_min=n_min):
        if p > 4 and a.squares[0] > 0.9 - 1 / a.n:
            continue
        assert verify_t_step(a, p).passed


def test_t_step_hypotheses():
    with pytest.raises(HypothesisViolated):
        verify_t_step(CoefficientVector.from_squares((0.6, 0.4)), 3.5)
    with pytest.raises(HypothesisViolated):
        verify_t_step(CoefficientVector.from_squares((0.8, 0.1, 0.1)), 5.0)
    with pytest.raises(DomainError):
        verify_t_step(CoefficientVector.from_squares((0.5, 0.3, 0.2)), 2.0)


def test_step_identity():
    for x, y, z in [(0.5, 1 / 3, 0.2), (3.0, -1.0, 7.5), (0.0, 0.0, 0.0)]:
        report = verify_step_identity(x, y, z)
        assert report.lhs == pytest.approx(report.rhs)
        assert report.passed


def test_composition_at_four():
    report = verify_procedure_composition(CoefficientVector.from_squares((0.5, 0.3, 0.2)), 4.0)
    assert report.detail["drop_sum"] == pytest.approx(0.38 - 1 / 3)
    assert report.lhs == pytest.approx(2.0 * (0.38 - 1 / 3))
    assert report.rhs == pytest.approx(2.0 * (0.38 - 1 / 3))
    assert report.detail["telescoped"]
    assert report.detail["identity_ok"]
    assert report.passed


@pytest.mark.parametrize("p", [3.5, 4.0, 5.0])
def test_composition_random(p):
    for a in random_vectors(15, 7, seed=11, n_min=3):
        if p > 4 and a.squares[0] > 0.9 - 1 / a.n:
            continue
        assert verify_procedure_composition(a, p).passed


def test_composition_of_diagonal_is_empty():
    report = verify_procedure_composition(CoefficientVector.diagonal(4), 4.5)
    assert report.detail["steps"] == 0
    assert report.lhs == 0.0
    assert report.passed


def test_n2_at_four():
    assert n2_constant(4.0) == pytest.approx(7.2)
    report = verify_n2_closed_form(0.5, 4.0)
    assert report.lhs == pytest.approx(2.0)
    assert report.rhs == pytest.approx(2.2)
    assert report.detail["taylor_ratio"] == pytest.approx(8.0, rel=1e-3)
    assert report.passed


@pytest.mark.parametrize("p", [3.5, 4.5, 6.0, 10.0])
def test_n2_grid(p):
    for k in range(11):
        assert verify_n2_closed_form(k / 20, p).passed


def test_n2_errors():
    with pytest.raises(DomainError):
        verify_n2_closed_form(0.6, 4.0)
    with pytest.raises(DomainError):
        verify_n2_closed_form(0.1, 3.0)


def test_exchange_into_pure_gaussian_at_four():
    a = CoefficientVector.from_squares((0.5, 0.5))
    report = verify_exchange_step(ExchangeSplit(a, 1), 4.0)
    assert report.detail["b"] == pytest.approx(math.sqrt(0.5))
    assert report.margin == pytest.approx(0.0, abs=1e-9)


@given(
    st.floats(-10, 10, allow_nan=False),
    st.floats(-10, 10, allow_nan=False),
    st.floats(-10, 10, allow_nan=False),
)
def test_step_identity_property(x, y, z):
    assert verify_step_identity(x, y, z).passed
