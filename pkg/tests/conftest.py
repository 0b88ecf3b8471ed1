"""Shared fixtures and instance builders for the test suite."""

import itertools

import numpy as np
import pytest

from digp.pursuit_core import support_residual
from digp.signal_model import generate_sensing_matrix


def random_instance(seed, n=16, m=10, k=3, noise=0.0):
    """Unit-column Gaussian A, k-sparse Gaussian x and y = A x (+ noise)."""
    rng = np.random.default_rng(seed)
    A = generate_sensing_matrix(m, n, rng)
    support = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
    x = np.zeros(n)
    x[list(support)] = rng.standard_normal(k)
    y = A @ x
    if noise > 0.0:
        y = y + noise * rng.standard_normal(m)
    return A, x, y, support


def best_subset(A, y, k):
    """Exhaustive search for the k-subset with the smallest residual."""
    best, best_norm = None, np.inf
    for subset in itertools.combinations(range(A.shape[1]), k):
        norm = float(np.linalg.norm(support_residual(A, y, subset)))
        if norm < best_norm:
            best, best_norm = subset, norm
    return best, best_norm


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
