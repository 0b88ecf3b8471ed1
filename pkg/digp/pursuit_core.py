"""
Pursuit Core - linear-algebra primitives shared by every greedy solver

All functions here are pure: they never mutate their arguments and return
bit-identical results for identical inputs.

Support-sets are represented internally as sorted tuples of 0-based column
indices (``SupportSet``). Conversion to the 1-based convention used in files
and reports happens only at the I/O boundary (see ``to_one_based``).
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Tuple

import numpy as np
import scipy.linalg as spla

from digp.config import PINV_RCOND

logger = logging.getLogger(__name__)

SupportSet = Tuple[int, ...]

EMPTY_SUPPORT: SupportSet = ()


# ============================================================================
# RESULT TYPE
# ============================================================================

@dataclass(frozen=True)
class PursuitResult:
    """(support estimate, sparse signal estimate, residual norm) of a local solve."""

    support: SupportSet
    estimate: np.ndarray
    residual_norm: float
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def eta(self) -> float:
        return self.residual_norm


# ============================================================================
# SUPPORT-SET HELPERS
# ============================================================================

def as_support(indices: Iterable[int], n: int) -> SupportSet:
    """
    Normalize an iterable of 0-based indices into a SupportSet.

    Raises:
        ValueError: on duplicates or indices outside [0, n)
    """
    values = [int(i) for i in indices]
    support = tuple(sorted(set(values)))
    if len(support) != len(values):
        raise ValueError(f"Support-set contains duplicate indices: {values}")
    if support and (support[0] < 0 or support[-1] >= n):
        raise ValueError(f"Support-set index out of range [1, {n}]: {[i + 1 for i in support]}")
    return support


def to_one_based(support: SupportSet) -> list:
    return [i + 1 for i in support]


def from_one_based(indices: Iterable[int], n: int) -> SupportSet:
    return as_support((int(i) - 1 for i in indices), n)


def check_problem(A: np.ndarray, y: np.ndarray) -> None:
    """Validate a (sensing matrix, measurement) pair."""
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"Sensing matrix must be a non-empty 2-D array, got shape {A.shape}")
    if y.ndim != 1 or y.shape[0] != A.shape[0]:
        raise ValueError(f"Measurement length {y.shape} does not match matrix rows {A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise ValueError("Sensing matrix contains non-finite entries")


# ============================================================================
# PRIMITIVES
# ============================================================================

def resid(y: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Least-squares residual of ``y`` onto the column span of ``B``.

    Returns ``y - B B^+ y``; a copy of ``y`` when ``B`` has no columns.
    Rank-deficient ``B`` is handled through the minimum-norm solution.

    Raises:
        ValueError: if the row counts differ or ``B`` has more columns than rows
    """
    y = np.asarray(y, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != y.shape[0]:
        raise ValueError(f"resid: matrix shape {B.shape} incompatible with vector length {y.shape[0]}")
    if B.shape[1] == 0:
        return y.copy()
    if B.shape[1] > B.shape[0]:
        raise ValueError(f"resid: {B.shape[1]} columns exceed {B.shape[0]} rows")
    coef = spla.lstsq(B, y, cond=PINV_RCOND, lapack_driver="gelsd")[0]
    return y - B @ coef


def max_indices(x: np.ndarray, k: int) -> SupportSet:
    """
    Indices of the ``k`` largest-amplitude entries of ``x``.

    Ties are broken in favour of the lowest index.

    Raises:
        ValueError: if k < 0 or k > len(x)
    """
    x = np.asarray(x)
    if k < 0 or k > x.shape[0]:
        raise ValueError(f"max_indices: k={k} outside [0, {x.shape[0]}]")
    if k == 0:
        return EMPTY_SUPPORT
    order = np.argsort(-np.abs(x), kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def top_within(x: np.ndarray, candidates: SupportSet, k: int) -> SupportSet:
    """``max_indices`` restricted to ``candidates`` (lowest index wins ties)."""
    if k < 0 or k > len(candidates):
        raise ValueError(f"top_within: k={k} outside [0, {len(candidates)}]")
    if k == 0:
        return EMPTY_SUPPORT
    cand = np.asarray(candidates, dtype=np.int64)
    order = np.argsort(-np.abs(np.asarray(x)[cand]), kind="stable")
    return tuple(sorted(int(i) for i in cand[order[:k]]))


def supp_accumulate(s: np.ndarray, support: Iterable[int]) -> np.ndarray:
    """
    Add one vote to every index of ``support``; returns a new score vector.

    Raises:
        ValueError: if an index falls outside the score vector
    """
    out = np.array(s, dtype=np.int64, copy=True)
    idx = np.asarray(list(support), dtype=np.int64)
    if idx.size == 0:
        return out
    if idx.min() < 0 or idx.max() >= out.shape[0]:
        raise ValueError(f"supp_accumulate: index out of range [1, {out.shape[0]}]")
    np.add.at(out, idx, 1)
    return out


def least_squares_on_support(A: np.ndarray, y: np.ndarray, support: SupportSet) -> np.ndarray:
    """
    Sparse vector with ``x_T = A_T^+ y`` and zeros elsewhere.

    Raises:
        ValueError: if |T| exceeds the number of measurements
    """
    m, n = A.shape
    if len(support) > m:
        raise ValueError(f"least_squares_on_support: |T|={len(support)} exceeds M={m}")
    x = np.zeros(n)
    if not support:
        return x
    cols = list(support)
    x[cols] = spla.lstsq(A[:, cols], y, cond=PINV_RCOND, lapack_driver="gelsd")[0]
    return x


def support_residual(A: np.ndarray, y: np.ndarray, support: SupportSet) -> np.ndarray:
    return resid(y, A[:, list(support)])


# ============================================================================
# FORWARD-ADD / REVERSE-FETCH
# ============================================================================

def forward_add(
    A: np.ndarray, y: np.ndarray, r_k: np.ndarray, T_k: SupportSet
) -> Tuple[np.ndarray, SupportSet]:
    """
    Grow ``T_k`` by the column most correlated with the residual ``r_k``.

    Indices already in ``T_k`` are excluded from the selection.

    Returns:
        (r_{k+1}, T_{k+1}) with |T_{k+1}| = |T_k| + 1

    Raises:
        ValueError: if |T_k| already equals the number of measurements
    """
    m, n = A.shape
    if len(T_k) >= m:
        raise ValueError(f"forward_add: |T_k|={len(T_k)} leaves no spare dimension (M={m})")
    if len(T_k) >= n:
        raise ValueError(f"forward_add: support already holds all {n} columns")
    correlation = np.abs(A.T @ r_k)
    if T_k:
        correlation[list(T_k)] = -np.inf
    tau = int(np.argmax(correlation))
    T_next = tuple(sorted(T_k + (tau,)))
    return support_residual(A, y, T_next), T_next


def reverse_fetch(
    A: np.ndarray, y: np.ndarray, T_next: SupportSet, k: int
) -> Tuple[np.ndarray, SupportSet]:
    """
    Keep the ``k`` strongest least-squares coefficients of ``T_next``.

    Returns:
        (r', T') with |T'| = k and T' a subset of ``T_next``

    Raises:
        ValueError: if |T_next| != k + 1
    """
    if k < 0 or len(T_next) != k + 1:
        raise ValueError(f"reverse_fetch: |T_(k+1)|={len(T_next)} does not match k+1={k + 1}")
    x_tilde = least_squares_on_support(A, y, T_next)
    T_prime = top_within(x_tilde, T_next, k)
    return support_residual(A, y, T_prime), T_prime


__all__ = [
    "SupportSet",
    "EMPTY_SUPPORT",
    "PursuitResult",
    "as_support",
    "to_one_based",
    "from_one_based",
    "check_problem",
    "resid",
    "max_indices",
    "top_within",
    "supp_accumulate",
    "least_squares_on_support",
    "support_residual",
    "forward_add",
    "reverse_fetch",
]
