"""Tests for the linear-algebra primitives of digp.pursuit_core."""

import numpy as np
import pytest

from digp.pursuit_core import (
    as_support,
    forward_add,
    from_one_based,
    least_squares_on_support,
    max_indices,
    resid,
    reverse_fetch,
    supp_accumulate,
    support_residual,
    to_one_based,
    top_within,
)
from tests.conftest import random_instance


# ============================================================================
# resid
# ============================================================================

def test_resid_with_no_columns_returns_y():
    y = np.array([1.0, -2.0, 3.0])
    r = resid(y, np.zeros((3, 0)))
    assert np.array_equal(r, y)
    assert r is not y


def test_resid_onto_full_orthonormal_basis_is_zero(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    y = rng.standard_normal(5)
    assert np.allclose(resid(y, Q), 0.0, atol=1e-12)


def test_resid_projection_onto_first_axis():
    r = resid(np.array([1.0, 1.0]), np.array([[1.0], [0.0]]))
    assert np.allclose(r, [0.0, 1.0])


def test_resid_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        resid(np.ones(3), np.ones((4, 2)))
    with pytest.raises(ValueError):
        resid(np.ones(3), np.ones((3, 4)))


@pytest.mark.parametrize("seed", range(20))
def test_resid_is_shorter_and_orthogonal(seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((12, 4))
    y = rng.standard_normal(12)
    r = resid(y, B)
    assert np.linalg.norm(r) <= np.linalg.norm(y) + 1e-12
    assert np.all(np.abs(B.T @ r) <= 1e-8)


def test_resid_handles_rank_deficient_columns(rng):
    b = rng.standard_normal(6)
    B = np.column_stack([b, 2.0 * b])
    y = rng.standard_normal(6)
    r = resid(y, B)
    expected = y - b * (b @ y) / (b @ b)
    assert np.allclose(r, expected, atol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_nested_supports_have_non_increasing_residuals(seed):
    A, _, y, _ = random_instance(seed, n=20, m=12, k=3, noise=0.1)
    small = (0, 3, 7)
    large = small + (11, 15)
    r_small = np.linalg.norm(support_residual(A, y, small))
    r_large = np.linalg.norm(support_residual(A, y, tuple(sorted(large))))
    assert r_large <= r_small + 1e-9


# ============================================================================
# max_indices / top_within / supp_accumulate
# ============================================================================

def test_max_indices_amplitude_sort():
    assert max_indices(np.array([0.1, -3.0, 2.0]), 2) == (1, 2)


def test_max_indices_zero_k_is_empty():
    assert max_indices(np.array([5.0, 1.0]), 0) == ()


def test_max_indices_tie_goes_to_lowest_index():
    assert max_indices(np.array([1.0, 1.0, 0.0]), 1) == (0,)
    assert max_indices(np.zeros(5), 3) == (0, 1, 2)


def test_max_indices_rejects_k_above_length():
    with pytest.raises(ValueError):
        max_indices(np.ones(3), 4)


def test_top_within_restricts_to_candidates():
    x = np.array([9.0, 0.5, 8.0, 0.7, 0.1])
    assert top_within(x, (1, 3, 4), 2) == (1, 3)


def test_supp_accumulate_examples():
    assert supp_accumulate(np.array([0, 0, 0]), (0, 2)).tolist() == [1, 0, 1]
    assert supp_accumulate(np.array([2, 0, 1]), ()).tolist() == [2, 0, 1]
    assert supp_accumulate(np.array([1, 1, 1]), (0, 1, 2)).tolist() == [2, 2, 2]


def test_supp_accumulate_leaves_input_untouched():
    s = np.array([0, 1, 0])
    out = supp_accumulate(s, (0,))
    assert s.tolist() == [0, 1, 0]
    assert out.tolist() == [1, 1, 0]


def test_supp_accumulate_rejects_out_of_range():
    with pytest.raises(ValueError):
        supp_accumulate(np.zeros(3, dtype=int), (3,))


# ============================================================================
# Support helpers
# ============================================================================

def test_as_support_sorts_and_validates():
    assert as_support([4, 1, 2], 5) == (1, 2, 4)
    with pytest.raises(ValueError):
        as_support([1, 1], 5)
    with pytest.raises(ValueError):
        as_support([5], 5)


def test_one_based_conversion():
    assert to_one_based((0, 4)) == [1, 5]
    assert from_one_based([5, 1], 5) == (0, 4)
    with pytest.raises(ValueError):
        from_one_based([0], 5)


# ============================================================================
# least_squares_on_support
# ============================================================================

def test_least_squares_empty_support_is_zero(rng):
    A = rng.standard_normal((4, 6))
    assert np.array_equal(least_squares_on_support(A, rng.standard_normal(4), ()), np.zeros(6))


def test_least_squares_identity_picks_coordinate():
    x = least_squares_on_support(np.eye(3), np.array([1.0, 2.0, 3.0]), (1,))
    assert np.allclose(x, [0.0, 2.0, 0.0])


def test_least_squares_recovers_sparse_vector():
    A, x, y, support = random_instance(7, n=16, m=8, k=3)
    x_hat = least_squares_on_support(A, y, support)
    assert np.allclose(x_hat, x, atol=1e-9)
    assert np.all(x_hat[np.setdiff1d(np.arange(16), support)] == 0.0)


def test_least_squares_rejects_oversized_support(rng):
    A = rng.standard_normal((3, 6))
    with pytest.raises(ValueError):
        least_squares_on_support(A, np.ones(3), (0, 1, 2, 3))


# ============================================================================
# forward_add / reverse_fetch
# ============================================================================

def test_forward_add_from_empty_is_first_omp_pick():
    A, _, y, _ = random_instance(3, n=20, m=10, k=3)
    r, T = forward_add(A, y, y, ())
    assert T == (int(np.argmax(np.abs(A.T @ y))),)
    assert np.allclose(r, support_residual(A, y, T))


@pytest.mark.parametrize("seed", range(200))
def test_forward_add_picks_new_index_and_shrinks_residual(seed):
    A, _, y, _ = random_instance(seed, n=30, m=12, k=4, noise=0.05)
    rng = np.random.default_rng(seed + 10_000)
    T_k = tuple(sorted(int(i) for i in rng.choice(30, size=5, replace=False)))
    r_k = support_residual(A, y, T_k)
    r_next, T_next = forward_add(A, y, r_k, T_k)
    new = set(T_next) - set(T_k)
    assert len(T_next) == len(T_k) + 1 and len(new) == 1
    assert np.linalg.norm(r_next) <= np.linalg.norm(r_k) + 1e-12


def test_forward_add_needs_spare_dimension(rng):
    A = rng.standard_normal((3, 8))
    y = rng.standard_normal(3)
    with pytest.raises(ValueError):
        forward_add(A, y, y, (0, 1, 2))


def test_reverse_fetch_to_empty_returns_y(rng):
    A = rng.standard_normal((5, 8))
    y = rng.standard_normal(5)
    r, T = reverse_fetch(A, y, (4,), 0)
    assert T == ()
    assert np.array_equal(r, y)


def test_reverse_fetch_drops_zero_coefficient_index(rng):
    A = rng.standard_normal((6, 8))
    y = 2.0 * A[:, 1] - A[:, 5]
    r, T = reverse_fetch(A, y, (1, 3, 5), 2)
    assert T == (1, 5)
    assert np.linalg.norm(r) <= 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_reverse_fetch_returns_subset_of_requested_size(seed):
    A, _, y, _ = random_instance(seed, n=20, m=10, k=3, noise=0.1)
    T_next = (2, 5, 9, 13)
    r, T = reverse_fetch(A, y, T_next, 3)
    assert len(T) == 3 and set(T) < set(T_next)
    assert np.array_equal(r, support_residual(A, y, T))


def test_reverse_fetch_rejects_cardinality_mismatch(rng):
    A = rng.standard_normal((5, 8))
    with pytest.raises(ValueError):
        reverse_fetch(A, np.ones(5), (0, 1, 2), 1)


def test_primitives_are_bit_deterministic():
    A, _, y, _ = random_instance(11, n=24, m=12, k=4, noise=0.1)
    first = reverse_fetch(A, y, (1, 4, 8, 16, 20), 4)
    second = reverse_fetch(A, y, (1, 4, 8, 16, 20), 4)
    assert first[1] == second[1]
    assert np.array_equal(first[0], second[0])
