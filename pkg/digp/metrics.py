"""
Metrics - reconstruction quality and iteration statistics

SRER is pooled over all (node, realization) pairs as a ratio of sums.
ASCE is the mean support distortion 1 - |T ∩ T_hat| / |T|.
Both accumulators merge associatively so parallel workers can reduce
their partial results in any grouping.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple, Union

import numpy as np

from digp.pursuit_core import SupportSet, max_indices

logger = logging.getLogger(__name__)


def support_distortion(t_true: SupportSet, t_hat: SupportSet) -> float:
    """
    d(T, T_hat) = 1 - |T ∩ T_hat| / |T|.

    Raises:
        ValueError: if the true support is empty
    """
    if not t_true:
        raise ValueError("Support distortion is undefined for an empty true support-set")
    return 1.0 - len(set(t_true) & set(t_hat)) / len(t_true)


# ============================================================================
# ACCUMULATORS
# ============================================================================

@dataclass
class MetricsAccumulator:
    """Pooled signal/error energies and support distortion."""

    sum_signal_energy: float = 0.0
    sum_error_energy: float = 0.0
    sum_distortion: float = 0.0
    count: int = 0
    keep_log: bool = False
    # (signal energy, error energy, distortion) per pair when keep_log is set
    log: List[Tuple[float, float, float]] = field(default_factory=list)

    def add(self, x: np.ndarray, x_hat: np.ndarray, t_true: SupportSet, t_hat: SupportSet) -> None:
        signal = float(np.sum(np.asarray(x) ** 2))
        error = float(np.sum((np.asarray(x) - np.asarray(x_hat)) ** 2))
        distortion = support_distortion(t_true, t_hat)
        self.sum_signal_energy += signal
        self.sum_error_energy += error
        self.sum_distortion += distortion
        self.count += 1
        if self.keep_log:
            self.log.append((signal, error, distortion))

    def merge(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        """New accumulator holding both sets of pairs."""
        return MetricsAccumulator(
            sum_signal_energy=self.sum_signal_energy + other.sum_signal_energy,
            sum_error_energy=self.sum_error_energy + other.sum_error_energy,
            sum_distortion=self.sum_distortion + other.sum_distortion,
            count=self.count + other.count,
            keep_log=self.keep_log or other.keep_log,
            log=self.log + other.log,
        )


@dataclass
class IterationStats:
    """Running mean/std of an iteration count."""

    total: float = 0.0
    total_sq: float = 0.0
    count: int = 0

    def add(self, value: Union[int, float]) -> None:
        self.total += value
        self.total_sq += value * value
        self.count += 1

    def extend(self, values: Iterable[Union[int, float]]) -> None:
        for value in values:
            self.add(value)

    def merge(self, other: "IterationStats") -> "IterationStats":
        return IterationStats(self.total + other.total, self.total_sq + other.total_sq, self.count + other.count)

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    @property
    def std(self) -> float:
        if not self.count:
            return 0.0
        return math.sqrt(max(0.0, self.total_sq / self.count - self.mean ** 2))


# ============================================================================
# MEASURES
# ============================================================================

def srer(accumulator: MetricsAccumulator) -> Tuple[float, float]:
    """
    Signal-to-reconstruction-error ratio.

    Returns:
        (linear, dB); both +inf when the pooled error energy is zero

    Raises:
        ValueError: if nothing was accumulated
    """
    if accumulator.count == 0:
        raise ValueError("SRER needs at least one accumulated pair")
    if accumulator.sum_error_energy == 0.0:
        return math.inf, math.inf
    linear = accumulator.sum_signal_energy / accumulator.sum_error_energy
    if linear == 0.0:
        return 0.0, -math.inf
    return linear, 10.0 * math.log10(linear)


def asce(pairs: Union[MetricsAccumulator, Iterable[Tuple[SupportSet, SupportSet]]]) -> float:
    """
    Average support-set cardinality error over (T_true, T_hat) pairs.

    Accepts either the pairs themselves or an accumulator.

    Raises:
        ValueError: on an empty input or an empty true support
    """
    if isinstance(pairs, MetricsAccumulator):
        if pairs.count == 0:
            raise ValueError("ASCE needs at least one accumulated pair")
        return pairs.sum_distortion / pairs.count
    distortions = [support_distortion(t_true, t_hat) for t_true, t_hat in pairs]
    if not distortions:
        raise ValueError("ASCE needs at least one support pair")
    return float(np.mean(distortions))


def modsp_iteration_bound(x, t_ini: SupportSet, A, w, k: int) -> float:
    """
    Iteration bound k* = ceil(log2(||x outside T_ini|| / max_|T|=K ||A_T^T w||)).

    The maximizing K-subset is the K columns with the largest |a_j^T w|,
    which is what an exhaustive search over K-subsets returns. Only a
    reporting diagnostic: the RIP hypothesis (delta_3K <= 0.139) behind
    the bound is not verified.

    Returns:
        k* as a float; +inf when w = 0 (checked first), 0 when x lies on
        T_ini or the log is non-positive
    """
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    w = np.asarray(w, dtype=float)
    correlation = A.T @ w
    t_w = max_indices(correlation, k)
    denominator = float(np.linalg.norm(correlation[list(t_w)]))
    if denominator == 0.0:
        return math.inf
    outside = np.ones(x.shape[0], dtype=bool)
    outside[list(t_ini)] = False
    numerator = float(np.linalg.norm(x[outside]))
    if numerator == 0.0:
        return 0.0
    value = math.log2(numerator / denominator)
    return float(max(0, math.ceil(value)))


__all__ = [
    "support_distortion",
    "MetricsAccumulator",
    "IterationStats",
    "srer",
    "asce",
    "modsp_iteration_bound",
]
