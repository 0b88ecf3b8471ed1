"""Tests for the local solvers: modOMP, modSP and FROGS."""

import numpy as np
import pytest
from sklearn.linear_model import orthogonal_mp

from digp.pursuit_core import least_squares_on_support, support_residual
from digp.solvers import FROGSSolver, OMPSolver, SolverRegistry, SPSolver, frogs, mod_omp, mod_sp
from tests.conftest import best_subset, random_instance


def subspace_pursuit(A, k, y):
    """Plain SP written out with numpy least squares."""
    def ls(cols):
        coef = np.linalg.lstsq(A[:, cols], y, rcond=None)[0]
        return coef, y - A[:, cols] @ coef

    def top(values, k):
        return list(np.argsort(-np.abs(values), kind="stable")[:k])

    def prune(union):
        union = sorted(union)
        coef, _ = ls(union)
        return sorted(union[i] for i in top(coef, k))

    support = prune(top(A.T @ y, k))
    r = ls(support)[1]
    while True:
        candidate = prune(set(top(A.T @ r, k)) | set(support))
        r_candidate = ls(candidate)[1]
        if np.linalg.norm(r_candidate) >= np.linalg.norm(r):
            return tuple(int(i) for i in support), float(np.linalg.norm(r))
        support, r = candidate, r_candidate


# ============================================================================
# Registry
# ============================================================================

def test_registry_lists_all_local_solvers():
    assert {"omp", "sp", "frogs"} <= set(SolverRegistry.get_all())
    assert SolverRegistry.get_all()["sp"] is SPSolver
    assert isinstance(SolverRegistry.create("omp"), OMPSolver)


def test_registry_rejects_unknown_solver():
    with pytest.raises(ValueError):
        SolverRegistry.create("cosamp")


@pytest.mark.parametrize(
    "name,label,construction,reversible",
    [
        ("omp", "modOMP", "serial", False),
        ("sp", "modSP", "parallel", True),
        ("frogs", "FROGS", "serial", True),
    ],
)
def test_solver_info(name, label, construction, reversible):
    info = SolverRegistry.create(name).get_solver_info()
    assert info == {"name": name, "label": label, "construction": construction, "reversible": reversible}


def test_solver_class_matches_function():
    A, _, y, _ = random_instance(5, n=20, m=10, k=3, noise=0.05)
    assert SolverRegistry.create("sp").solve(A, 3, y).support == mod_sp(A, 3, y).support
    assert SolverRegistry.create("frogs").solve(A, 3, y, (2,)).support == frogs(A, 3, y, (2,)).support


@pytest.mark.parametrize("solver", [mod_omp, mod_sp, frogs])
def test_solvers_validate_inputs(solver):
    A, _, y, _ = random_instance(0, n=16, m=10, k=3)
    with pytest.raises(ValueError):
        solver(A, 11, y)
    with pytest.raises(ValueError):
        solver(A, 2, y, (0, 1, 2))
    with pytest.raises(ValueError):
        solver(A, 3, y[:-1])


def test_frogs_needs_a_spare_dimension():
    A, _, y, _ = random_instance(0, n=16, m=10, k=3)
    with pytest.raises(ValueError):
        frogs(A, 10, y)
    assert len(frogs(A, 9, y).support) == 9
    assert FROGSSolver.spare_dimensions == 1


# ============================================================================
# modOMP
# ============================================================================

@pytest.mark.parametrize("seed", range(100))
def test_mod_omp_runs_exactly_the_missing_iterations(seed):
    A, _, y, support = random_instance(seed, n=30, m=15, k=5, noise=0.05)
    rng = np.random.default_rng(seed)
    t_ini = tuple(sorted(int(i) for i in rng.choice(30, size=seed % 5, replace=False)))
    result = mod_omp(A, 5, y, t_ini)
    assert result.iterations == 5 - len(t_ini)
    assert len(result.support) == 5
    assert set(t_ini) <= set(result.support)


def test_mod_omp_with_full_initial_support_does_nothing():
    A, _, y, support = random_instance(2, n=16, m=10, k=3)
    result = mod_omp(A, 3, y, support)
    assert result.iterations == 0
    assert result.support == support
    assert result.residual_norm <= 1e-9


@pytest.mark.parametrize("seed", range(25))
def test_mod_omp_matches_sklearn_orthogonal_mp(seed):
    A, _, y, _ = random_instance(seed, n=60, m=30, k=5, noise=0.05)
    coef = orthogonal_mp(A, y, n_nonzero_coefs=5)
    assert mod_omp(A, 5, y).support == tuple(int(i) for i in np.flatnonzero(coef))


def test_mod_omp_estimate_is_least_squares_on_support():
    A, _, y, _ = random_instance(9, n=24, m=12, k=4, noise=0.1)
    result = mod_omp(A, 4, y)
    assert np.array_equal(result.estimate, least_squares_on_support(A, y, result.support))
    assert result.eta == pytest.approx(np.linalg.norm(support_residual(A, y, result.support)))


def test_mod_omp_with_k_zero_returns_empty_support():
    A, _, y, _ = random_instance(1, n=16, m=10, k=3)
    result = mod_omp(A, 0, y)
    assert result.support == ()
    assert result.residual_norm == pytest.approx(np.linalg.norm(y))


@pytest.mark.parametrize("seed", range(30))
def test_mod_omp_exact_recovery_matches_exhaustive_search(seed):
    A, _, y, _ = random_instance(seed, n=16, m=10, k=3)
    result = mod_omp(A, 3, y)
    if result.residual_norm <= 1e-9:
        assert result.support == best_subset(A, y, 3)[0]


# ============================================================================
# modSP
# ============================================================================

def test_mod_sp_zero_measurement():
    A, _, _, _ = random_instance(4, n=16, m=10, k=3)
    result = mod_sp(A, 3, np.zeros(10))
    assert result.residual_norm == 0.0
    assert len(result.support) == 3
    assert np.array_equal(result.estimate, np.zeros(16))


@pytest.mark.parametrize("seed", range(100))
def test_mod_sp_from_empty_is_subspace_pursuit(seed):
    A, _, y, _ = random_instance(seed, n=50, m=25, k=4, noise=0.1)
    expected_support, expected_norm = subspace_pursuit(A, 4, y)
    result = mod_sp(A, 4, y)
    assert result.support == expected_support
    assert result.residual_norm == pytest.approx(expected_norm, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_mod_sp_accepts_only_strict_decreases(seed):
    A, _, y, _ = random_instance(seed, n=40, m=20, k=5, noise=0.1)
    t_ini = (seed % 40, (seed + 7) % 40)
    result = mod_sp(A, 5, y, t_ini)
    norms = result.diagnostics["residual_norms"]
    assert len(norms) == result.iterations + 1
    assert all(b < a for a, b in zip(norms[:-2], norms[1:-1]))
    assert norms[-1] >= norms[-2]
    assert result.residual_norm == min(norms)
    assert not result.diagnostics["capped"]


def test_mod_sp_truncates_oversized_union():
    A, _, y, _ = random_instance(6, n=20, m=6, k=4, noise=0.1)
    result = mod_sp(A, 4, y, (12, 15, 17, 19))
    assert len(result.support) == 4


@pytest.mark.parametrize("seed", range(30))
def test_mod_sp_exact_recovery_matches_exhaustive_search(seed):
    A, _, y, _ = random_instance(seed, n=16, m=10, k=3)
    result = mod_sp(A, 3, y)
    if result.residual_norm <= 1e-9:
        assert result.support == best_subset(A, y, 3)[0]


# ============================================================================
# FROGS
# ============================================================================

@pytest.mark.parametrize("seed", range(100))
def test_frogs_never_worse_than_its_omp_initialization(seed):
    A, _, y, _ = random_instance(seed, n=100, m=30, k=10, noise=0.1)
    t_ini = tuple(range(seed % 4))
    assert frogs(A, 10, y, t_ini).residual_norm <= mod_omp(A, 10, y, t_ini).residual_norm


def test_frogs_keeps_an_exact_omp_solution():
    exact = 0
    for seed in range(20):
        A, _, y, _ = random_instance(seed, n=16, m=10, k=2)
        omp = mod_omp(A, 2, y)
        if omp.residual_norm > 1e-9:
            continue
        exact += 1
        result = frogs(A, 2, y)
        assert result.support == omp.support
        assert result.diagnostics["reverse_accepts"] == 0
        assert result.iterations == 1
    assert exact > 0


def test_frogs_reports_its_initialization():
    A, _, y, _ = random_instance(8, n=40, m=20, k=5, noise=0.1)
    result = frogs(A, 5, y)
    assert result.diagnostics["init_residual_norm"] == mod_omp(A, 5, y).residual_norm
    assert result.iterations >= 1
    assert not result.diagnostics["capped"]
    assert len(result.support) == 5


@pytest.mark.parametrize("seed", range(30))
def test_frogs_exact_recovery_matches_exhaustive_search(seed):
    A, _, y, _ = random_instance(seed, n=16, m=10, k=3)
    result = frogs(A, 3, y)
    if result.residual_norm <= 1e-9:
        assert result.support == best_subset(A, y, 3)[0]
