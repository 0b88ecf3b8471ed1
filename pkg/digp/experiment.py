"""
Experiment - declarative Monte-Carlo sweeps over alpha, algorithm and topology

Testing schedule per alpha: Q matrix trials, each with P signal trials, on
all L nodes, so every (alpha, algorithm, topology) cell averages L*Q*P
realizations. All algorithms and topologies of one alpha see the very same
data, drawn from streams keyed by (alpha index, q, p, node).

Work is split into (alpha index, q) tasks. Task outputs are merged in task
order, so results do not depend on the number of worker processes.
"""

import csv
import logging
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from digp.config import CSV_HEADER, DEFAULT_ALPHA_GRID, DEFAULT_ROUND_CAP, DEFAULT_WORKERS, TIMING_BASELINE
from digp.distributed import DISTRIBUTED_ALGORITHMS, RoundTrace, simulate
from digp.metrics import IterationStats, MetricsAccumulator, asce, srer
from digp.network import Topology, random_topology, ring_topology, watts_strogatz
from digp.pursuit_core import EMPTY_SUPPORT
from digp.signal_model import Ensemble, ModelParams, RandomStreams, realization, sensing_matrices
from digp.solvers import SolverRegistry

logger = logging.getLogger(__name__)

LOCAL_ALGORITHMS = ("omp", "sp", "frogs")
ALL_ALGORITHMS = LOCAL_ALGORITHMS + tuple(DISTRIBUTED_ALGORITHMS)

# Local algorithms run each node alone; they are reported under C_0
BASELINE_TOPOLOGY_LABEL = "ring:0"


# ============================================================================
# TOPOLOGY SPECS
# ============================================================================

@dataclass(frozen=True)
class TopologySpec:
    """One topology of a sweep: ring:d, rand:d or watts:q,p."""

    kind: Literal["ring", "rand", "watts"]
    degree: int = 0
    q: int = 0
    p: float = 0.0

    @property
    def label(self) -> str:
        if self.kind == "watts":
            return f"watts:{self.q},{self.p:g}"
        return f"{self.kind}:{self.degree}"

    def build(self, nodes: int, streams: RandomStreams, alpha_index: int, q: int, p: int) -> Topology:
        """
        Materialize the topology for one realization.

        rand:d is redrawn for every realization, watts:q,p is drawn once per
        experiment seed.
        """
        if self.kind == "ring":
            return ring_topology(nodes, self.degree)
        if self.kind == "rand":
            rng = streams.topology(0, self.degree, alpha_index, q, p)
            return random_topology(nodes, self.degree, rng)
        rng = streams.topology(1, self.q, int(round(self.p * 1_000_000)))
        return watts_strogatz(nodes, self.q, self.p, rng)


_RANGE = re.compile(r"^(\d+)-(\d+)$")


def parse_topology_spec(spec: str, nodes: int) -> List[TopologySpec]:
    """
    Parse a topology spec into one or more TopologySpecs.

    Accepted forms: ``ring:2``, ``rand:3``, ``watts:3,0.3``, degree sweeps
    ``ring:0-9`` / ``rand:2-9`` and ``ring:all`` (0..L-1).

    Raises:
        ValueError: on unknown kinds or out-of-range parameters
    """
    kind, sep, arg = spec.strip().partition(":")
    kind = kind.lower()
    if not sep or not arg:
        raise ValueError(f"Topology spec {spec!r} must look like ring:d, rand:d or watts:q,p")

    if kind == "watts":
        try:
            q_text, p_text = arg.split(",")
            q, p = int(q_text), float(p_text)
        except ValueError as e:
            raise ValueError(f"Watts-Strogatz spec {spec!r} must be watts:q,p") from e
        if q < 1 or 2 * q > nodes - 1 or not 0.0 <= p <= 1.0:
            raise ValueError(f"Watts-Strogatz spec {spec!r} out of range for L={nodes}")
        return [TopologySpec(kind="watts", q=q, p=p)]

    if kind not in ("ring", "rand"):
        raise ValueError(f"Unknown topology kind {kind!r} in {spec!r}")

    lowest = 0 if kind == "ring" else 2
    if arg == "all":
        degrees = list(range(lowest, nodes))
    elif _RANGE.match(arg):
        start, stop = (int(v) for v in _RANGE.match(arg).groups())
        degrees = list(range(start, stop + 1))
    else:
        try:
            degrees = [int(arg)]
        except ValueError as e:
            raise ValueError(f"Topology degree in {spec!r} is not an integer") from e

    if not degrees:
        raise ValueError(f"Topology spec {spec!r} selects no degree")
    for degree in degrees:
        if not lowest <= degree <= nodes - 1:
            raise ValueError(f"Degree {degree} in {spec!r} outside [{lowest}, {nodes - 1}] for L={nodes}")
    return [TopologySpec(kind=kind, degree=d) for d in degrees]


# ============================================================================
# CONFIG
# ============================================================================

def _split_list(value):
    if isinstance(value, str):
        return [v for v in (part.strip() for part in value.split(",")) if v]
    return value


class ExperimentConfig(BaseModel):
    """A sweep: model parameters, alpha grid, algorithms, topologies, trials."""

    model_config = ConfigDict(extra="forbid")

    name: str = "custom"
    description: str = ""
    # Signal model
    n: int = 500
    nodes: int = 10
    k_common: int = 10
    k_private: Union[int, List[int]] = 10
    signal: Literal["gaussian", "binary"] = "gaussian"
    smnr: Union[Literal["clean"], float] = 20.0
    # Sweep
    alpha: List[float] = list(DEFAULT_ALPHA_GRID)
    algorithms: List[str] = list(ALL_ALGORITHMS)
    topology: List[str] = ["ring:2"]
    q_trials: int = 10
    p_trials: int = 10
    seed: int = 0
    round_cap: int = DEFAULT_ROUND_CAP
    workers: int = DEFAULT_WORKERS
    # When set, alpha values giving a non-integral M are dropped instead of rejected
    filter_alpha: bool = False

    @field_validator("alpha", "algorithms", "topology", mode="before")
    @classmethod
    def _parse_lists(cls, value):
        return _split_list(value)

    @field_validator("smnr", mode="before")
    @classmethod
    def _parse_smnr(cls, value):
        if isinstance(value, str) and value.strip().lower() == "clean":
            return "clean"
        return float(value)

    @field_validator("algorithms")
    @classmethod
    def _check_algorithms(cls, value):
        unknown = [a for a in value if a not in ALL_ALGORITHMS]
        if unknown:
            raise ValueError(f"Unknown algorithms {unknown}. Available: {list(ALL_ALGORITHMS)}")
        if not value:
            raise ValueError("At least one algorithm is required")
        return list(dict.fromkeys(value))

    @model_validator(mode="after")
    def _check_sweep(self):
        if self.q_trials < 1 or self.p_trials < 1:
            raise ValueError(f"Q and P must be >= 1, got Q={self.q_trials}, P={self.p_trials}")
        if self.seed < 0:
            raise ValueError(f"Seed must be non-negative, got {self.seed}")
        if self.round_cap < 1:
            raise ValueError(f"Round cap must be positive, got {self.round_cap}")
        if not self.alpha:
            raise ValueError("The alpha sweep is empty")
        if self.filter_alpha:
            kept = [a for a in self.alpha if abs(a * self.n - round(a * self.n)) <= 1e-9]
            if not kept:
                raise ValueError(f"No alpha in {self.alpha} gives an integral M for N={self.n}")
            self.alpha = kept
        for alpha in self.alpha:
            params = self.model_params(alpha)
            needs_spare = any(a in ("frogs", "difrogs") for a in self.algorithms)
            k_max = self.k_common + max(params.k_private_per_node())
            if needs_spare and k_max > params.m - 1:
                raise ValueError(f"alpha={alpha}: FROGS needs K_max={k_max} <= M-1 = {params.m - 1}")
        self.topology_specs()
        return self

    def model_params(self, alpha: float) -> ModelParams:
        """Validated model parameters at one alpha (names alpha on failure)."""
        try:
            return ModelParams(
                n=self.n, nodes=self.nodes, k_common=self.k_common, k_private=self.k_private,
                signal=self.signal, smnr=self.smnr, alpha=alpha,
            )
        except ValueError as e:
            raise ValueError(f"alpha={alpha}: {e}") from e

    def topology_specs(self) -> List[TopologySpec]:
        specs: List[TopologySpec] = []
        for text in self.topology:
            for spec in parse_topology_spec(text, self.nodes):
                if spec not in specs:
                    specs.append(spec)
        return specs

    @property
    def realizations(self) -> int:
        return self.nodes * self.q_trials * self.p_trials

    @property
    def smnr_label(self) -> str:
        return "clean" if self.smnr == "clean" else f"{self.smnr:g}"


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class ResultRow:
    """One CSV record: a (alpha, algorithm, topology) cell."""

    alpha: float
    algorithm: str
    topology: str
    smnr_db: str
    signal: str
    srer_db: float
    asce: float
    outer_mean: float
    outer_std: float
    inner_mean: float
    inner_std: float
    realizations: int
    wall_seconds: float

    def as_csv_row(self) -> Dict[str, str]:
        return {
            "alpha": f"{self.alpha:g}",
            "algorithm": self.algorithm,
            "topology": self.topology,
            "smnr_db": self.smnr_db,
            "signal": self.signal,
            "srer_db": _fmt(self.srer_db, 6),
            "asce": _fmt(self.asce, 6),
            "outer_mean": _fmt(self.outer_mean, 4),
            "outer_std": _fmt(self.outer_std, 4),
            "inner_mean": _fmt(self.inner_mean, 4),
            "inner_std": _fmt(self.inner_std, 4),
            "realizations": str(self.realizations),
            "wall_seconds": _fmt(self.wall_seconds, 3),
        }


def _fmt(value: float, digits: int) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


@dataclass
class CellAccumulator:
    """Partial results of one cell; merged across tasks."""

    metrics: MetricsAccumulator = field(default_factory=MetricsAccumulator)
    outer: IterationStats = field(default_factory=IterationStats)
    inner: IterationStats = field(default_factory=IterationStats)
    seconds: float = 0.0
    non_converged: int = 0

    def merge(self, other: "CellAccumulator") -> "CellAccumulator":
        return CellAccumulator(
            metrics=self.metrics.merge(other.metrics),
            outer=self.outer.merge(other.outer),
            inner=self.inner.merge(other.inner),
            seconds=self.seconds + other.seconds,
            non_converged=self.non_converged + other.non_converged,
        )


CellKey = Tuple[int, str, str]


# ============================================================================
# TASKS
# ============================================================================

def _cells(config: ExperimentConfig) -> List[Tuple[str, Optional[TopologySpec]]]:
    cells: List[Tuple[str, Optional[TopologySpec]]] = []
    specs = config.topology_specs()
    for algorithm in config.algorithms:
        if algorithm in LOCAL_ALGORITHMS:
            cells.append((algorithm, None))
        else:
            cells.extend((algorithm, spec) for spec in specs)
    return cells


def _run_local(solver_name: str, ensemble: Ensemble, cell: CellAccumulator) -> None:
    solver = SolverRegistry.create(solver_name)
    for problem in ensemble.problems:
        k_max = len(problem.t_common) + len(problem.t_private)
        result = solver.solve(problem.A, k_max, problem.y, EMPTY_SUPPORT)
        cell.metrics.add(problem.x, result.estimate, problem.support, result.support)
        cell.outer.add(0)
        cell.inner.add(result.iterations)


def _run_task(payload: dict) -> Tuple[Dict[CellKey, CellAccumulator], List[RoundTrace]]:
    """Run every cell on the P realizations of one (alpha index, q) task."""
    config = ExperimentConfig(**payload["config"])
    alpha_index, q = payload["alpha_index"], payload["q"]
    keep_traces = payload["trace"]
    params = config.model_params(config.alpha[alpha_index])
    streams = RandomStreams(config.seed)
    matrices = sensing_matrices(params, streams, alpha_index, q)

    cells: Dict[CellKey, CellAccumulator] = {}
    traces: List[RoundTrace] = []
    for p in range(config.p_trials):
        ensemble = realization(params, streams, alpha_index, q, p, matrices)
        for algorithm, spec in _cells(config):
            label = spec.label if spec is not None else BASELINE_TOPOLOGY_LABEL
            cell = cells.setdefault((alpha_index, algorithm, label), CellAccumulator())
            started = time.perf_counter()
            if spec is None:
                _run_local(algorithm, ensemble, cell)
            else:
                topology = spec.build(params.nodes, streams, alpha_index, q, p)
                outcome = simulate(
                    ensemble, topology, algorithm,
                    round_cap=config.round_cap,
                    run_id=f"a{alpha_index}q{q}p{p}:{algorithm}:{label}",
                )
                for problem, result, outer, inner in zip(
                    ensemble.problems, outcome.results, outcome.outer_rounds, outcome.inner_iterations
                ):
                    cell.metrics.add(problem.x, result.estimate, problem.support, result.support)
                    cell.outer.add(outer)
                    cell.inner.extend(inner)
                if not outcome.converged:
                    cell.non_converged += 1
                if keep_traces:
                    traces.append(outcome.trace)
            cell.seconds += time.perf_counter() - started
    return cells, traces


def run_experiment(
    config: ExperimentConfig,
    traces: Optional[List[RoundTrace]] = None,
    workers: Optional[int] = None,
) -> List[ResultRow]:
    """
    Run a sweep and return one ResultRow per (alpha, algorithm, topology).

    Args:
        config: Validated experiment configuration
        traces: If given, the RoundTrace of every simulated run is appended
        workers: Worker processes (defaults to ``config.workers``)

    Returns:
        Rows ordered by alpha, then algorithm order, then topology order
    """
    workers = config.workers if workers is None else workers
    payload_config = config.model_dump()
    tasks = [
        {"config": payload_config, "alpha_index": a, "q": q, "trace": traces is not None}
        for a in range(len(config.alpha))
        for q in range(config.q_trials)
    ]
    logger.info(
        f"Experiment {config.name}: {len(config.alpha)} alpha value(s), {len(_cells(config))} cell(s) per alpha, "
        f"{config.realizations} realizations per point, {workers} worker(s)"
    )

    merged: Dict[CellKey, CellAccumulator] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = pool.map(_run_task, tasks)
            _merge_outputs(outputs, merged, traces)
    else:
        _merge_outputs((_run_task(t) for t in tasks), merged, traces)

    rows = []
    for alpha_index, alpha in enumerate(config.alpha):
        for algorithm, spec in _cells(config):
            label = spec.label if spec is not None else BASELINE_TOPOLOGY_LABEL
            cell = merged[(alpha_index, algorithm, label)]
            if cell.non_converged:
                logger.warning(f"alpha={alpha:g} {algorithm} {label}: {cell.non_converged} run(s) hit the round cap")
            _, srer_db = srer(cell.metrics)
            rows.append(ResultRow(
                alpha=alpha,
                algorithm=algorithm,
                topology=label,
                smnr_db=config.smnr_label,
                signal=config.signal,
                srer_db=srer_db,
                asce=asce(cell.metrics),
                outer_mean=cell.outer.mean,
                outer_std=cell.outer.std,
                inner_mean=cell.inner.mean,
                inner_std=cell.inner.std,
                realizations=cell.metrics.count,
                wall_seconds=cell.seconds,
            ))
            logger.info(f"alpha={alpha:g} {algorithm:8s} {label:12s} SRER={srer_db:7.2f} dB ASCE={rows[-1].asce:.4f}")
    return rows


def _merge_outputs(outputs: Iterable, merged: Dict[CellKey, CellAccumulator], traces: Optional[List[RoundTrace]]) -> None:
    for cells, task_traces in outputs:
        for key, cell in cells.items():
            merged[key] = merged[key].merge(cell) if key in merged else cell
        if traces is not None:
            traces.extend(task_traces)


# ============================================================================
# OUTPUT
# ============================================================================

def emit_csv(rows: Sequence[ResultRow], path: Union[str, Path]) -> Path:
    """
    Write rows with the fixed header.

    Raises:
        ValueError: if rows is empty (nothing is written)
        OSError: if the path cannot be written
    """
    if not rows:
        raise ValueError("No result rows to write")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_HEADER, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row.as_csv_row())
    except OSError as e:
        raise OSError(f"Cannot write results to {path}: {e}") from e
    return path


def _slug(label: str) -> str:
    return label.replace(":", "").replace(",", "_")


def _write_table(path: Path, header: List[str], records: List[List[str]]) -> Path:
    try:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(records)
    except OSError as e:
        raise OSError(f"Cannot write plot data to {path}: {e}") from e
    return path


def emit_plotdata(rows: Sequence[ResultRow], directory: Union[str, Path]) -> List[Path]:
    """
    Write one small CSV per curve.

    - ``srer_<algorithm>_<topology>.csv``: alpha, srer_db
    - ``asce_<algorithm>_<topology>.csv``: alpha, asce
    - ``iterations_<algorithm>_a<alpha>.csv``: degree vs outer/inner means
      and stds, for ring/rand topologies of distributed algorithms

    Raises:
        ValueError: if rows is empty
        OSError: if the directory cannot be written
    """
    if not rows:
        raise ValueError("No result rows to write")
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"Cannot create plot data directory {directory}: {e}") from e

    curves: Dict[Tuple[str, str], List[ResultRow]] = {}
    for row in rows:
        curves.setdefault((row.algorithm, row.topology), []).append(row)

    written = []
    for (algorithm, topology), curve in curves.items():
        curve = sorted(curve, key=lambda r: r.alpha)
        stem = f"{algorithm}_{_slug(topology)}"
        written.append(_write_table(
            directory / f"srer_{stem}.csv", ["alpha", "srer_db"],
            [[f"{r.alpha:g}", _fmt(r.srer_db, 6)] for r in curve],
        ))
        written.append(_write_table(
            directory / f"asce_{stem}.csv", ["alpha", "asce"],
            [[f"{r.alpha:g}", _fmt(r.asce, 6)] for r in curve],
        ))

    sweeps: Dict[Tuple[str, float], List[Tuple[int, ResultRow]]] = {}
    for row in rows:
        if row.algorithm not in DISTRIBUTED_ALGORITHMS:
            continue
        kind, _, arg = row.topology.partition(":")
        if kind in ("ring", "rand") and arg.isdigit():
            sweeps.setdefault((row.algorithm, row.alpha), []).append((int(arg), row))
    for (algorithm, alpha), points in sweeps.items():
        points.sort(key=lambda item: (item[0], item[1].topology))
        written.append(_write_table(
            directory / f"iterations_{algorithm}_a{alpha:g}.csv",
            ["topology", "degree", "outer_mean", "outer_std", "inner_mean", "inner_std"],
            [
                [r.topology, str(d), _fmt(r.outer_mean, 4), _fmt(r.outer_std, 4), _fmt(r.inner_mean, 4), _fmt(r.inner_std, 4)]
                for d, r in points
            ],
        ))
    return written


def timing_ratios(rows: Sequence[ResultRow], baseline: str = TIMING_BASELINE) -> Dict[str, float]:
    """
    Total wall time per algorithm divided by the baseline's total.

    Raises:
        ValueError: if the baseline is missing or took no measurable time
    """
    totals: Dict[str, float] = {}
    for row in rows:
        totals[row.algorithm] = totals.get(row.algorithm, 0.0) + row.wall_seconds
    if baseline not in totals:
        raise ValueError(f"Timing baseline {baseline!r} not among the algorithms run: {sorted(totals)}")
    if totals[baseline] <= 0.0:
        raise ValueError(f"Timing baseline {baseline!r} recorded no time")
    return {algorithm: seconds / totals[baseline] for algorithm, seconds in totals.items()}


__all__ = [
    "LOCAL_ALGORITHMS",
    "ALL_ALGORITHMS",
    "BASELINE_TOPOLOGY_LABEL",
    "TopologySpec",
    "parse_topology_spec",
    "ExperimentConfig",
    "ResultRow",
    "CellAccumulator",
    "run_experiment",
    "emit_csv",
    "emit_plotdata",
    "timing_ratios",
]
