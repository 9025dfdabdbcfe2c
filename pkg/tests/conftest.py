"""Shared fixtures."""
import numpy as np
import pytest

from khl.dist_core import CoefficientVector


def random_vectors(count, n_max, seed=0, n_min=1):
    rng = np.random.default_rng(seed)
    vectors = []
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        vectors.append(CoefficientVector.from_squares(rng.exponential(size=n)))
    return vectors


@pytest.fixture()
def vectors():
    return random_vectors(40, 8, seed=3)
