"""
Signal Model - jointly sparse ensembles under the mixed support-set model

Each node l observes y_l = A_l x_l + w_l where x_l = z_c + z_p: the common
part z_c has a support shared by all nodes, the private part z_p has a
per-node support. Supports may overlap; overlapping coefficients add.

Random numbers come from counter-based Philox generators keyed by
SeedSequence spawn keys, so any (alpha, Q, P, node) stream can be
regenerated on its own regardless of execution order.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from digp.pursuit_core import SupportSet, as_support, from_one_based, to_one_based

logger = logging.getLogger(__name__)

SignalKind = Literal["gaussian", "binary"]

# Tolerance on alpha * N being an integer
ALPHA_INTEGRALITY_TOL = 1e-9


# ============================================================================
# PARAMETERS
# ============================================================================

class ModelParams(BaseModel):
    """Signal model parameters for one alpha value."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = 500
    nodes: int = 10
    k_common: int = 10
    k_private: Union[int, List[int]] = 10
    signal: SignalKind = "gaussian"
    smnr: Union[Literal["clean"], float] = 20.0
    alpha: float = 0.15

    @field_validator("smnr", mode="before")
    @classmethod
    def _parse_smnr(cls, value):
        if isinstance(value, str):
            if value.strip().lower() == "clean":
                return "clean"
            value = float(value)
        if not math.isfinite(float(value)):
            raise ValueError(f"SMNR must be finite in dB or 'clean', got {value}")
        return float(value)

    @model_validator(mode="after")
    def _check_dimensions(self):
        if self.n < 1 or self.nodes < 1:
            raise ValueError(f"N and L must be positive (N={self.n}, L={self.nodes})")
        if self.k_common < 0 or min(self.k_private_per_node()) < 0:
            raise ValueError("Support cardinalities must be non-negative")
        if isinstance(self.k_private, list) and len(self.k_private) != self.nodes:
            raise ValueError(f"k_private lists {len(self.k_private)} values for L={self.nodes} nodes")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} outside (0, 1]")
        if abs(self.alpha * self.n - round(self.alpha * self.n)) > ALPHA_INTEGRALITY_TOL:
            raise ValueError(f"alpha={self.alpha} gives non-integral M = {self.alpha * self.n:g} for N={self.n}")
        if self.m < 1:
            raise ValueError(f"alpha={self.alpha} gives M=0 for N={self.n}")
        k_max = self.k_common + max(self.k_private_per_node())
        if k_max > self.m:
            raise ValueError(f"K_c + max K_p = {k_max} exceeds M={self.m} (alpha={self.alpha})")
        return self

    @property
    def m(self) -> int:
        return int(round(self.alpha * self.n))

    @property
    def is_clean(self) -> bool:
        return self.smnr == "clean"

    @property
    def smnr_label(self) -> str:
        return "clean" if self.is_clean else f"{self.smnr:g}"

    def k_private_per_node(self) -> List[int]:
        if isinstance(self.k_private, list):
            return list(self.k_private)
        return [self.k_private] * self.nodes

    def k_max(self, node: int) -> int:
        return self.k_common + self.k_private_per_node()[node]

    def with_alpha(self, alpha: float) -> "ModelParams":
        """Validated copy for another alpha."""
        return ModelParams(**{**self.model_dump(), "alpha": alpha})


# ============================================================================
# DATA
# ============================================================================

@dataclass(frozen=True)
class NodeProblem:
    """One sensor's data: (A_l, x_l, y_l), true supports and noise level."""

    A: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t_common: SupportSet
    t_private: SupportSet
    sigma2: float

    @property
    def support(self) -> SupportSet:
        return tuple(sorted(set(self.t_common) | set(self.t_private)))

    @property
    def noise(self) -> np.ndarray:
        return self.y - self.A @ self.x

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class Ensemble:
    """L node problems sharing one common support-set."""

    problems: List[NodeProblem]
    seed: int = 0

    @property
    def nodes(self) -> int:
        return len(self.problems)

    @property
    def t_common(self) -> SupportSet:
        return self.problems[0].t_common if self.problems else ()


# ============================================================================
# RANDOM STREAMS
# ============================================================================

class RandomStreams:
    """
    Independent Philox streams derived from one master seed.

    Spawn keys are (tag, *indices); a stream depends only on its key, never on
    which other streams were drawn before it.
    """

    MATRIX = 0
    SIGNAL = 1
    COMMON = 2
    TOPOLOGY = 3

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def generator(self, tag: int, *indices: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(tag, *(int(i) for i in indices)))
        return np.random.Generator(np.random.Philox(seq))

    def matrix(self, alpha_index: int, q: int, node: int) -> np.random.Generator:
        return self.generator(self.MATRIX, alpha_index, q, node)

    def signal(self, alpha_index: int, q: int, p: int, node: int) -> np.random.Generator:
        return self.generator(self.SIGNAL, alpha_index, q, p, node)

    def common(self, alpha_index: int, q: int, p: int) -> np.random.Generator:
        return self.generator(self.COMMON, alpha_index, q, p)

    def topology(self, *indices: int) -> np.random.Generator:
        return self.generator(self.TOPOLOGY, *indices)


# ============================================================================
# GENERATION
# ============================================================================

def generate_sensing_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Gaussian sensing matrix with entries N(0, 1/M) and unit-norm columns.

    Raises:
        ValueError: if not 1 <= M <= N
    """
    if m < 1 or n < 1 or m > n:
        raise ValueError(f"Sensing matrix needs 1 <= M <= N, got M={m}, N={n}")
    A = rng.normal(0.0, 1.0 / math.sqrt(m), size=(m, n))
    return A / np.linalg.norm(A, axis=0)


def expected_signal_energy(params: ModelParams, node: int = 0) -> float:
    """E{||x||^2}; binary signals add 2 per expected common/private overlap."""
    kc = params.k_common
    kp = params.k_private_per_node()[node]
    if params.signal == "binary":
        return kc + kp + 2.0 * kc * kp / params.n
    return float(kc + kp)


def calibrate_noise(params: ModelParams, node: int = 0) -> float:
    """
    Noise variance sigma_w^2 = E{||x||^2} / (SMNR * M).

    Returns:
        0.0 for clean measurements
    """
    if params.is_clean:
        return 0.0
    smnr_linear = 10.0 ** (params.smnr / 10.0)
    if smnr_linear <= 0.0:
        raise ValueError(f"SMNR must be positive on the linear scale, got {params.smnr} dB")
    return expected_signal_energy(params, node) / (smnr_linear * params.m)


def draw_common_support(params: ModelParams, rng: np.random.Generator) -> SupportSet:
    return as_support(rng.choice(params.n, size=params.k_common, replace=False), params.n)


def draw_node_problem(
    params: ModelParams,
    A: np.ndarray,
    t_common: SupportSet,
    node: int,
    rng: np.random.Generator,
) -> NodeProblem:
    """Draw one node's private support, coefficients and noisy measurements."""
    n = params.n
    k_private = params.k_private_per_node()[node]
    t_private = as_support(rng.choice(n, size=k_private, replace=False), n)

    x = np.zeros(n)
    if params.signal == "binary":
        x[list(t_common)] += 1.0
        x[list(t_private)] += 1.0
    else:
        x[list(t_common)] += rng.standard_normal(len(t_common))
        x[list(t_private)] += rng.standard_normal(len(t_private))

    sigma2 = calibrate_noise(params, node)
    y = A @ x
    if sigma2 > 0.0:
        y = y + rng.normal(0.0, math.sqrt(sigma2), size=A.shape[0])
    return NodeProblem(A=A, x=x, y=y, t_common=t_common, t_private=t_private, sigma2=sigma2)


def generate_ensemble(
    params: ModelParams,
    rng: np.random.Generator,
    matrices: Optional[Sequence[np.ndarray]] = None,
    seed: int = 0,
) -> Ensemble:
    """
    Draw a full ensemble from a single generator.

    Args:
        params: Model parameters
        rng: Generator consumed in order (common support, then per node)
        matrices: Optional per-node sensing matrices to reuse
        seed: Seed recorded on the ensemble

    Returns:
        Ensemble of L NodeProblems sharing one common support-set
    """
    t_common = draw_common_support(params, rng)
    problems = []
    for node in range(params.nodes):
        A = matrices[node] if matrices is not None else generate_sensing_matrix(params.m, params.n, rng)
        problems.append(draw_node_problem(params, A, t_common, node, rng))
    return Ensemble(problems=problems, seed=seed)


def sensing_matrices(params: ModelParams, streams: RandomStreams, alpha_index: int, q: int) -> List[np.ndarray]:
    """The L sensing matrices of matrix trial q."""
    return [
        generate_sensing_matrix(params.m, params.n, streams.matrix(alpha_index, q, node))
        for node in range(params.nodes)
    ]


def realization(
    params: ModelParams,
    streams: RandomStreams,
    alpha_index: int,
    q: int,
    p: int,
    matrices: Optional[Sequence[np.ndarray]] = None,
) -> Ensemble:
    """
    Ensemble for cell (alpha_index, q, p) drawn from split streams.

    Matrices depend on (alpha_index, q, node) only, so trial q's matrices are
    shared by all P signal trials.
    """
    if matrices is None:
        matrices = sensing_matrices(params, streams, alpha_index, q)
    t_common = draw_common_support(params, streams.common(alpha_index, q, p))
    problems = [
        draw_node_problem(params, matrices[node], t_common, node, streams.signal(alpha_index, q, p, node))
        for node in range(params.nodes)
    ]
    return Ensemble(problems=problems, seed=streams.seed)


def measured_smnr_db(problems: Sequence[NodeProblem]) -> float:
    """Empirical SMNR in dB: sum ||x||^2 / sum ||w||^2."""
    signal = sum(float(np.sum(p.x ** 2)) for p in problems)
    noise = sum(float(np.sum(p.noise ** 2)) for p in problems)
    if noise == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / noise)


# ============================================================================
# DUMP / LOAD
# ============================================================================

ENSEMBLE_MAGIC = b"DIGPENS\x00"
ENSEMBLE_VERSION = 1


def _u32(values) -> bytes:
    return np.asarray(values, dtype="<u4").tobytes()


def dump_ensemble(ensemble: Ensemble, path: Union[str, Path]) -> Path:
    """
    Write an ensemble in the flat little-endian fixture format.

    Layout: magic, version (u32), L, M, N (u32), seed (u64), then per node
    sigma2 (f64), |T_c| + indices, |T_p| + indices (u32, 1-based),
    A (f64, row-major), x (f64), y (f64).
    """
    path = Path(path)
    if not ensemble.problems:
        raise ValueError("Cannot dump an empty ensemble")
    m, n = ensemble.problems[0].A.shape
    chunks = [
        ENSEMBLE_MAGIC,
        _u32([ENSEMBLE_VERSION, ensemble.nodes, m, n]),
        np.asarray([ensemble.seed], dtype="<u8").tobytes(),
    ]
    for problem in ensemble.problems:
        if problem.A.shape != (m, n):
            raise ValueError(f"Node matrices differ in shape: {problem.A.shape} vs {(m, n)}")
        chunks.append(np.asarray([problem.sigma2], dtype="<f8").tobytes())
        for support in (problem.t_common, problem.t_private):
            chunks.append(_u32([len(support)] + to_one_based(support)))
        chunks.append(np.ascontiguousarray(problem.A, dtype="<f8").tobytes())
        chunks.append(np.asarray(problem.x, dtype="<f8").tobytes())
        chunks.append(np.asarray(problem.y, dtype="<f8").tobytes())
    try:
        path.write_bytes(b"".join(chunks))
    except OSError as e:
        raise OSError(f"Cannot write ensemble to {path}: {e}") from e
    logger.debug(f"Ensemble dumped: {path} (L={ensemble.nodes}, M={m}, N={n})")
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        if self.pos + size > len(self.data):
            raise ValueError(f"Truncated ensemble file: {self.path}")
        out = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.pos)
        self.pos += size
        return out


def load_ensemble(path: Union[str, Path]) -> Ensemble:
    """
    Read an ensemble written by ``dump_ensemble``.

    Raises:
        ValueError: on a bad magic, unsupported version or truncated file
    """
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(ENSEMBLE_MAGIC):
        raise ValueError(f"Not an ensemble file: {path}")
    reader = _Reader(data, path)
    reader.pos = len(ENSEMBLE_MAGIC)
    version, nodes, m, n = (int(v) for v in reader.take("<u4", 4))
    if version != ENSEMBLE_VERSION:
        raise ValueError(f"Unsupported ensemble version {version} in {path}")
    seed = int(reader.take("<u8", 1)[0])

    problems = []
    for _ in range(nodes):
        sigma2 = float(reader.take("<f8", 1)[0])
        supports = []
        for _ in range(2):
            size = int(reader.take("<u4", 1)[0])
            supports.append(from_one_based(reader.take("<u4", size), n))
        A = reader.take("<f8", m * n).reshape(m, n).astype(float)
        x = reader.take("<f8", n).astype(float)
        y = reader.take("<f8", m).astype(float)
        problems.append(NodeProblem(A=A, x=x, y=y, t_common=supports[0], t_private=supports[1], sigma2=sigma2))
    if reader.pos != len(data):
        raise ValueError(f"Trailing bytes in ensemble file: {path}")
    return Ensemble(problems=problems, seed=seed)


__all__ = [
    "SignalKind",
    "ModelParams",
    "NodeProblem",
    "Ensemble",
    "RandomStreams",
    "generate_sensing_matrix",
    "expected_signal_energy",
    "calibrate_noise",
    "draw_common_support",
    "draw_node_problem",
    "generate_ensemble",
    "sensing_matrices",
    "realization",
    "measured_smnr_db",
    "dump_ensemble",
    "load_ensemble",
]
