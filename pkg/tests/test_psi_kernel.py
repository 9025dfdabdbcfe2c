import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from khl.errors import DomainError
from khl.psi_kernel import PsiRegime, psi, psi_pair, psi_second, psi_second_integral, psi_second_lower_bound

S_GRID = (0.0, 0.3, 1.0, 2.7)
T_GRID = (0.1, 0.5, 1.0, 4.0)
P_GRID = (3.0, 3.3, 4.0, 5.5, 8.0)
KINK_GAP = 0.05


def _five_point_second(f, t, h):
    return (-f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)) / (12 * h * h)


def _near_kink(s, t, p):
    return p != round(p / 2) * 2 and abs(t - s * s) < KINK_GAP


def test_regime_from_p():
    assert PsiRegime.from_p(3) is PsiRegime.P3
    assert PsiRegime.from_p(3.5) is PsiRegime.P3TO4
    assert PsiRegime.from_p(4) is PsiRegime.P4
    assert PsiRegime.from_p(7) is PsiRegime.PGT4
    assert str(PsiRegime.P4) == "P4"
    with pytest.raises(DomainError):
        PsiRegime.from_p(2.5)


def test_psi_values():
    assert psi(0.0, 1.0, 3.0) == pytest.approx(2.0)
    assert psi(0.7, 0.0, 3.5) == pytest.approx(2 * 0.7**3.5)
    with pytest.raises(DomainError):
        psi(0.0, -1.0, 3.0)


@pytest.mark.parametrize("s", S_GRID)
@pytest.mark.parametrize("t", T_GRID)
def test_second_derivative_is_constant_at_p4(s, t):
    assert psi_second(s, t, 4.0) == pytest.approx(4.0, rel=1e-12)


def test_p3_closed_form():
    assert psi_second(2.0, 1.0, 3.0) == 0.0
    assert psi_second(0.0, 1.0, 3.0) == pytest.approx(1.5)


@pytest.mark.parametrize("p", P_GRID)
def test_closed_form_matches_finite_differences(p):
    for s, t in itertools.product(S_GRID, T_GRID):
        if _near_kink(s, t, p):
            continue
        h = 1e-3 * max(t, 1.0)
        numeric = _five_point_second(lambda u: psi(s, u, p), t, h)
        assert psi_second(s, t, p) == pytest.approx(numeric, rel=1e-6, abs=1e-6), (s, t, p)


@pytest.mark.parametrize("p", [p for p in P_GRID if p > 3])
def test_closed_form_matches_integral_representation(p):
    for s, t in itertools.product(S_GRID, T_GRID):
        assert psi_second_integral(s, t, p) == pytest.approx(psi_second(s, t, p), rel=1e-8), (s, t, p)


def test_integral_representation_domain():
    with pytest.raises(DomainError):
        psi_second_integral(0.0, 1.0, 3.0)
    with pytest.raises(DomainError):
        psi_second_integral(0.0, 0.0, 3.5)


def test_lower_bounds_hold_on_random_points():
    rng = np.random.default_rng(2024)
    ps = (3.0, 3.2, 3.5, 3.9, 4.0, 4.5, 5.0, 6.0, 8.0)
    for _ in range(10_000):
        s = float(rng.uniform(-3.0, 3.0))
        t = float(rng.uniform(0.01, 4.0))
        p = float(rng.choice(ps))
        value = psi_second(s, t, p)
        bound = psi_second_lower_bound(s, t, p)
        assert bound <= value * (1 + 1e-12) + 1e-12, (s, t, p)


def test_lower_bound_is_sharp_at_zero_shift():
    for p in (4.5, 6.0):
        assert psi_second_lower_bound(0.0, 0.7, p) == pytest.approx(psi_second(0.0, 0.7, p), rel=1e-12)


def test_psi_pair():
    p, s, x, t = 3.5, 0.4, 0.8, 0.3
    expected = 0.5 * (psi(s, x * x * (1 + t), p) + psi(s, x * x * (1 - t), p))
    assert psi_pair(s, x, t, p) == pytest.approx(expected)
    assert psi_pair(s, x, 0.0, p) == pytest.approx(psi(s, x * x, p))
    with pytest.raises(DomainError):
        psi_pair(s, x, 1.5, p)
    with pytest.raises(DomainError):
        psi_pair(s, 0.0, 0.5, p)


def test_second_derivative_is_nonnegative():
    for s, t, p in itertools.product(S_GRID, T_GRID, P_GRID):
        assert psi_second(s, t, p) >= 0.0
    assert math.isfinite(psi_second(1.0, 1.0, 3.5))


@given(
    st.floats(min_value=0.0, max_value=3.0),
    st.floats(min_value=0.05, max_value=4.0),
    st.sampled_from((3.0, 3.3, 3.7, 4.0, 5.5, 8.0)),
)
@settings(max_examples=200, deadline=None)
def test_kernel_is_even_in_s(s, t, p):
    assert psi(-s, t, p) == pytest.approx(psi(s, t, p), rel=1e-12)
    assert psi_second(-s, t, p) == pytest.approx(psi_second(s, t, p), rel=1e-12, abs=1e-12)
    assert psi_second_lower_bound(-s, t, p) == pytest.approx(psi_second_lower_bound(s, t, p), rel=1e-12)
    if p > 3 and abs(s - math.sqrt(t)) > 1e-3:
        assert psi_second_integral(-s, t, p) == pytest.approx(psi_second_integral(s, t, p), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("p", [4.0, 4.5, 5.5, 8.0])
@pytest.mark.parametrize("s", S_GRID)
def test_shifted_kernel_minus_centred_kernel_is_convex(p, s):
    ts = np.linspace(0.05, 4.0, 80)
    values = np.array([psi(s, float(t), p) - 2.0 * t ** (p / 2) for t in ts])
    second_differences = values[2:] - 2.0 * values[1:-1] + values[:-2]
    scale = float(np.max(np.abs(values))) + 1.0
    assert np.all(second_differences >= -1e-12 * scale)
