"""Tests for sensing matrices, signal ensembles, random streams and ensemble files."""

import math

import numpy as np
import pytest

from digp.signal_model import (
    ModelParams,
    RandomStreams,
    calibrate_noise,
    dump_ensemble,
    expected_signal_energy,
    generate_ensemble,
    generate_sensing_matrix,
    load_ensemble,
    measured_smnr_db,
    realization,
    sensing_matrices,
)


# ============================================================================
# ModelParams
# ============================================================================

def test_model_params_defaults():
    params = ModelParams()
    assert params.m == 75
    assert params.k_max(0) == 20
    assert params.smnr_label == "20"
    assert not params.is_clean


def test_model_params_parses_clean_and_numeric_smnr():
    assert ModelParams(smnr="clean").is_clean
    assert ModelParams(smnr="clean").smnr_label == "clean"
    assert ModelParams(smnr="30").smnr == 30.0


@pytest.mark.parametrize(
    "fields",
    [
        {"alpha": 0.123},
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"alpha": 0.03},
        {"k_private": [10, 10]},
        {"k_common": -1},
        {"smnr": "inf"},
    ],
)
def test_model_params_rejects_invalid(fields):
    with pytest.raises(ValueError):
        ModelParams(**fields)


def test_model_params_error_names_the_alpha():
    with pytest.raises(ValueError, match="0.123"):
        ModelParams(alpha=0.123)


def test_model_params_per_node_private_cardinalities():
    params = ModelParams(nodes=3, k_private=[1, 2, 3], alpha=0.1)
    assert params.k_private_per_node() == [1, 2, 3]
    assert params.k_max(2) == 13


def test_with_alpha_revalidates():
    params = ModelParams()
    assert params.with_alpha(0.2).m == 100
    with pytest.raises(ValueError):
        params.with_alpha(0.001)


# ============================================================================
# Sensing matrices
# ============================================================================

def test_sensing_matrix_has_unit_columns(rng):
    A = generate_sensing_matrix(75, 500, rng)
    assert A.shape == (75, 500)
    assert np.allclose(np.linalg.norm(A, axis=0), 1.0, atol=1e-12)


def test_sensing_matrix_entry_variance(rng):
    A = generate_sensing_matrix(250, 500, rng)
    assert np.var(A) * 250 == pytest.approx(1.0, rel=0.1)


def test_sensing_matrix_is_seed_deterministic():
    first = generate_sensing_matrix(10, 20, np.random.default_rng(3))
    second = generate_sensing_matrix(10, 20, np.random.default_rng(3))
    assert np.array_equal(first, second)


def test_sensing_matrix_rejects_wide_dimensions(rng):
    with pytest.raises(ValueError):
        generate_sensing_matrix(30, 20, rng)


# ============================================================================
# Noise calibration
# ============================================================================

def test_calibrate_noise_gaussian_example():
    assert calibrate_noise(ModelParams()) == pytest.approx(20.0 / (100.0 * 75))


def test_calibrate_noise_clean_is_zero():
    assert calibrate_noise(ModelParams(smnr="clean")) == 0.0


def test_binary_expected_energy_counts_overlap():
    assert expected_signal_energy(ModelParams(signal="binary")) == pytest.approx(20.4)


@pytest.mark.parametrize("signal", ["gaussian", "binary"])
def test_expected_energy_matches_monte_carlo(signal):
    params = ModelParams(nodes=1, signal=signal, smnr="clean")
    rng = np.random.default_rng(11)
    A = generate_sensing_matrix(params.m, params.n, rng)
    energies = [
        float(np.sum(generate_ensemble(params, rng, matrices=[A]).problems[0].x ** 2))
        for _ in range(20_000)
    ]
    assert np.mean(energies) == pytest.approx(expected_signal_energy(params), rel=0.02)


def test_measured_smnr_matches_target():
    params = ModelParams(nodes=1)
    rng = np.random.default_rng(5)
    A = generate_sensing_matrix(params.m, params.n, rng)
    problems = [generate_ensemble(params, rng, matrices=[A]).problems[0] for _ in range(10_000)]
    assert measured_smnr_db(problems) == pytest.approx(20.0, abs=0.2)


def test_clean_measurements_have_no_noise(rng):
    ensemble = generate_ensemble(ModelParams(nodes=2, smnr="clean"), rng)
    for problem in ensemble.problems:
        assert problem.sigma2 == 0.0
        assert np.array_equal(problem.y, problem.A @ problem.x)
    assert measured_smnr_db(ensemble.problems) == math.inf


# ============================================================================
# Ensembles
# ============================================================================

def test_ensemble_shares_common_support(rng):
    params = ModelParams(nodes=4, alpha=0.2)
    ensemble = generate_ensemble(params, rng)
    assert ensemble.nodes == 4
    assert len(ensemble.t_common) == params.k_common
    for problem in ensemble.problems:
        assert problem.t_common == ensemble.t_common
        assert len(problem.t_private) == params.k_private
        assert max(params.k_common, params.k_private) <= len(problem.support) <= params.k_max(0)
        assert tuple(int(i) for i in np.flatnonzero(problem.x)) == problem.support


def test_binary_overlap_adds_up(rng):
    params = ModelParams(nodes=10, n=40, alpha=1.0, signal="binary", smnr="clean")
    overlaps = 0
    for _ in range(10):
        for problem in generate_ensemble(params, rng).problems:
            shared = set(problem.t_common) & set(problem.t_private)
            overlaps += len(shared)
            for j in problem.support:
                assert problem.x[j] == (2.0 if j in shared else 1.0)
    assert overlaps > 0


def test_no_private_part_gives_identical_supports(rng):
    ensemble = generate_ensemble(ModelParams(nodes=5, k_private=0), rng)
    assert all(problem.support == ensemble.t_common for problem in ensemble.problems)


def test_no_common_part_gives_empty_common_support(rng):
    ensemble = generate_ensemble(ModelParams(nodes=3, k_common=0), rng)
    assert ensemble.t_common == ()
    assert all(len(problem.support) == 10 for problem in ensemble.problems)


# ============================================================================
# Random streams
# ============================================================================

def test_streams_depend_only_on_their_key():
    streams = RandomStreams(7)
    first = streams.matrix(0, 1, 2).standard_normal(5)
    streams.signal(0, 1, 0, 2).standard_normal(100)
    streams.common(0, 1, 0).standard_normal(100)
    assert np.array_equal(first, streams.matrix(0, 1, 2).standard_normal(5))


def test_streams_differ_across_keys_and_seeds():
    a = RandomStreams(7).matrix(0, 0, 0).standard_normal(5)
    assert not np.array_equal(a, RandomStreams(7).matrix(0, 0, 1).standard_normal(5))
    assert not np.array_equal(a, RandomStreams(8).matrix(0, 0, 0).standard_normal(5))
    assert not np.array_equal(a, RandomStreams(7).signal(0, 0, 0, 0).standard_normal(5))


def test_streams_reject_negative_seed():
    with pytest.raises(ValueError):
        RandomStreams(-1)


def test_realizations_share_matrices_within_a_matrix_trial():
    params = ModelParams(n=50, nodes=3, k_common=2, k_private=2, alpha=0.4)
    streams = RandomStreams(0)
    first = realization(params, streams, 0, 1, 0)
    second = realization(params, streams, 0, 1, 1)
    for a, b in zip(first.problems, second.problems):
        assert np.array_equal(a.A, b.A)
    assert any(not np.array_equal(a.x, b.x) for a, b in zip(first.problems, second.problems))


def test_realization_reproducible_with_precomputed_matrices():
    params = ModelParams(n=50, nodes=3, k_common=2, k_private=2, alpha=0.4)
    streams = RandomStreams(3)
    matrices = sensing_matrices(params, streams, 1, 0)
    first = realization(params, streams, 1, 0, 2, matrices=matrices)
    second = realization(params, streams, 1, 0, 2)
    for a, b in zip(first.problems, second.problems):
        assert np.array_equal(a.y, b.y)
        assert a.support == b.support


# ============================================================================
# Ensemble files
# ============================================================================

def test_dump_and_load_ensemble(tmp_path):
    params = ModelParams(n=30, nodes=3, k_common=2, k_private=3, alpha=0.5)
    ensemble = realization(params, RandomStreams(42), 0, 0, 0)
    path = dump_ensemble(ensemble, tmp_path / "ensemble.bin")
    loaded = load_ensemble(path)
    assert loaded.seed == 42
    assert loaded.nodes == 3
    for a, b in zip(ensemble.problems, loaded.problems):
        assert np.array_equal(a.A, b.A)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.y, b.y)
        assert (a.t_common, a.t_private, a.sigma2) == (b.t_common, b.t_private, b.sigma2)


def test_load_ensemble_rejects_corrupt_files(tmp_path):
    params = ModelParams(n=20, nodes=2, k_common=1, k_private=1, alpha=0.5)
    path = dump_ensemble(realization(params, RandomStreams(0), 0, 0, 0), tmp_path / "ensemble.bin")
    data = path.read_bytes()

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(ValueError):
        load_ensemble(bad_magic)

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(data[:-5])
    with pytest.raises(ValueError):
        load_ensemble(truncated)

    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(data + b"\x00")
    with pytest.raises(ValueError):
        load_ensemble(trailing)
