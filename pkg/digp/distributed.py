"""
Distributed - support-set voting and the DiOMP / DiSP / DiFROGS node loops

Nodes run in synchronous lockstep rounds. In every round each node
transmits its support-set estimate along its out-edges, receives the
estimates of its in-neighbours (itself included), votes for a common
support-set and re-solves locally seeded by the vote. Only index lists
travel over the network; signal values never leave a node.

The engine double-buffers messages: every node reads the board written
at the end of the previous round, so no node observes a neighbour's state
mid-round.

Algorithms:
- diomp   -> modOMP locally, common support grown one index per round,
             exactly K_c rounds after the initialization (round 0)
- disp    -> modSP locally, full-cardinality vote each round, revert rule,
             stops when the residual stops improving and inputs are stable
- difrogs -> as disp with FROGS as the local solver
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from digp.config import DEFAULT_ROUND_CAP, TRACE_HEADER
from digp.network import Topology
from digp.pursuit_core import EMPTY_SUPPORT, PursuitResult, SupportSet, max_indices, supp_accumulate
from digp.signal_model import Ensemble, NodeProblem
from digp.solvers import BaseSolver, SolverRegistry

logger = logging.getLogger(__name__)

# Distributed algorithm -> local solver registered in SolverRegistry
DISTRIBUTED_ALGORITHMS = {
    "diomp": "omp",
    "disp": "sp",
    "difrogs": "frogs",
}


# ============================================================================
# VOTING
# ============================================================================

@dataclass(frozen=True)
class VoteInput:
    """In-neighbourhood of one node and the support-sets it received."""

    node: int
    in_neighbors: Tuple[int, ...]
    received: Mapping[int, SupportSet]
    q: int
    n: int

    def __post_init__(self):
        if self.node not in self.in_neighbors:
            raise ValueError(f"Node {self.node + 1} missing from its own in-neighbourhood")
        if set(self.received) != set(self.in_neighbors):
            raise ValueError(
                f"Node {self.node + 1}: received supports from {sorted(j + 1 for j in self.received)}, "
                f"expected {sorted(j + 1 for j in self.in_neighbors)}"
            )
        if not 0 <= self.q <= self.n:
            raise ValueError(f"Vote cardinality q={self.q} outside [0, {self.n}]")


def vote_scores(vote_input: VoteInput) -> np.ndarray:
    scores = np.zeros(vote_input.n, dtype=np.int64)
    for neighbor in vote_input.in_neighbors:
        scores = supp_accumulate(scores, vote_input.received[neighbor])
    return scores


def vote_with_padding(vote_input: VoteInput) -> Tuple[SupportSet, int]:
    """
    Vote and report how many zero-score indices had to pad the result.

    Returns:
        (support-set of exactly q indices, padding count)
    """
    scores = vote_scores(vote_input)
    padded = max(0, vote_input.q - int(np.count_nonzero(scores)))
    if padded:
        logger.warning(f"Node {vote_input.node + 1}: vote padded with {padded} zero-score indices (q={vote_input.q})")
    return max_indices(scores, vote_input.q), padded


def vote(vote_input: VoteInput) -> SupportSet:
    """
    Majority vote: the q indices most often present in the received
    support-sets, lowest index first among equal counts.
    """
    return vote_with_padding(vote_input)[0]


# ============================================================================
# NODE STATE
# ============================================================================

@dataclass(frozen=True)
class NodeState:
    """State of one node between rounds."""

    node: int
    current: PursuitResult
    previous: PursuitResult
    received: Dict[int, SupportSet]
    received_old: Dict[int, SupportSet]
    round: int = 0
    converged: bool = False
    converged_round: Optional[int] = None
    inner_iterations: int = 0
    vote_padding: int = 0

    @property
    def reported(self) -> PursuitResult:
        """Best-so-far triple: the previous one if the last solve was worse."""
        if self.current.eta > self.previous.eta:
            return self.previous
        return self.current

    @property
    def transmit(self) -> SupportSet:
        return self.reported.support


def init_node_state(
    node: int, problem: NodeProblem, topology: Topology, solver: BaseSolver, k_max: int
) -> NodeState:
    """
    Initialization (round 0): local solve with an empty seed. Supports of
    the other in-neighbours start empty, the node's own entry holds its
    fresh estimate.
    """
    result = solver.solve(problem.A, k_max, problem.y, EMPTY_SUPPORT)
    received = {j: EMPTY_SUPPORT for j in topology.in_neighbors(node)}
    received[node] = result.support
    return NodeState(
        node=node,
        current=result,
        previous=result,
        received=received,
        received_old=dict(received),
        inner_iterations=result.iterations,
    )


def _receive(state: NodeState, incoming: Mapping[int, SupportSet]) -> Dict[int, SupportSet]:
    if set(incoming) != set(state.received):
        raise ValueError(
            f"Node {state.node + 1}: messages from {sorted(j + 1 for j in incoming)} "
            f"do not match in-neighbours {sorted(j + 1 for j in state.received)}"
        )
    return {j: tuple(incoming[j]) for j in sorted(incoming)}


def diomp_node_round(
    state: NodeState,
    A: np.ndarray,
    y: np.ndarray,
    k_private: int,
    k_common: int,
    k: int,
    incoming: Mapping[int, SupportSet],
    solver: Optional[BaseSolver] = None,
) -> NodeState:
    """
    One DiOMP round: vote a common support of cardinality k, then modOMP.

    Args:
        state: Node state after round k-1
        A, y: Node data
        k_private, k_common: K_p of this node and K_c
        k: Round index in 1..K_c
        incoming: Supports transmitted by the in-neighbours this round

    Returns:
        New NodeState; ``converged`` is set after round K_c
    """
    if not 1 <= k <= k_common:
        raise ValueError(f"DiOMP round k={k} outside [1, {k_common}]")
    solver = solver or SolverRegistry.create("omp")
    received = _receive(state, incoming)
    t_common, padded = vote_with_padding(
        VoteInput(node=state.node, in_neighbors=tuple(received), received=received, q=k, n=A.shape[1])
    )
    result = solver.solve(A, k_common + k_private, y, t_common)
    done = k == k_common
    return replace(
        state,
        current=result,
        previous=result,
        received=received,
        received_old=state.received,
        round=k,
        converged=done,
        converged_round=k if done else None,
        inner_iterations=result.iterations,
        vote_padding=state.vote_padding + padded,
    )


def _reversible_node_round(
    state: NodeState,
    A: np.ndarray,
    y: np.ndarray,
    k_private: int,
    k_common: int,
    incoming: Mapping[int, SupportSet],
    solver: BaseSolver,
) -> NodeState:
    if state.converged:
        return replace(state, inner_iterations=0)

    # Revert rule, then remember the triple the new solve must beat
    best = state.reported
    received = _receive(state, incoming)
    t_common, padded = vote_with_padding(
        VoteInput(node=state.node, in_neighbors=tuple(received), received=received, q=k_common, n=A.shape[1])
    )
    result = solver.solve(A, k_common + k_private, y, t_common)

    round_index = state.round + 1
    # The node's own estimate is judged by eta alone
    neighbours_stable = all(
        received[j] == state.received[j] for j in received if j != state.node
    )
    converged = result.eta >= best.eta and neighbours_stable
    return replace(
        state,
        current=best if converged else result,
        previous=best,
        received=received,
        received_old=state.received,
        round=round_index,
        converged=converged,
        converged_round=round_index if converged else None,
        inner_iterations=result.iterations,
        vote_padding=state.vote_padding + padded,
    )


def disp_node_round(
    state: NodeState,
    A: np.ndarray,
    y: np.ndarray,
    k_private: int,
    k_common: int,
    incoming: Mapping[int, SupportSet],
    solver: Optional[BaseSolver] = None,
) -> NodeState:
    """
    One DiSP round: revert if the last solve was worse, vote a full
    cardinality common support, re-run modSP seeded with it.

    The node converges when the residual did not improve and every
    support received from the other in-neighbours equals the one received
    in the previous round.
    A converged node is frozen on its best triple.
    """
    return _reversible_node_round(
        state, A, y, k_private, k_common, incoming, solver or SolverRegistry.create("sp")
    )


def difrogs_node_round(
    state: NodeState,
    A: np.ndarray,
    y: np.ndarray,
    k_private: int,
    k_common: int,
    incoming: Mapping[int, SupportSet],
    solver: Optional[BaseSolver] = None,
) -> NodeState:
    """DiSP round with FROGS as the local solver."""
    return _reversible_node_round(
        state, A, y, k_private, k_common, incoming, solver or SolverRegistry.create("frogs")
    )


# ============================================================================
# ROUND TRACE
# ============================================================================

@dataclass(frozen=True)
class TraceRecord:
    run_id: str
    node: int
    round: int
    eta: float
    support_overlap: int
    inner_iters: int

    def as_row(self) -> Dict[str, Union[str, int]]:
        return {
            "run_id": self.run_id,
            "node": self.node + 1,
            "round": self.round,
            "eta": f"{self.eta:.12g}",
            "support_overlap": self.support_overlap,
            "inner_iters": self.inner_iters,
        }


@dataclass
class RoundTrace:
    """Append-only per-node, per-round record of a simulation."""

    run_id: str = ""
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def record_round(self, states: Sequence[NodeState], problems: Sequence[NodeProblem], round_index: int) -> None:
        for state, problem in zip(states, problems):
            reported = state.reported
            self.append(TraceRecord(
                run_id=self.run_id,
                node=state.node,
                round=round_index,
                eta=reported.eta,
                support_overlap=len(set(reported.support) & set(problem.support)),
                inner_iters=state.inner_iterations,
            ))

    def for_node(self, node: int) -> List[TraceRecord]:
        return [r for r in self.records if r.node == node]

    def __len__(self) -> int:
        return len(self.records)


def write_traces(traces: Sequence[RoundTrace], path: Union[str, Path]) -> Path:
    """
    Export round traces as CSV (run_id, node, round, eta, support_overlap, inner_iters).

    Raises:
        OSError: if the path cannot be written
    """
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=TRACE_HEADER, lineterminator="\n")
            writer.writeheader()
            for trace in traces:
                for record in trace.records:
                    writer.writerow(record.as_row())
    except OSError as e:
        raise OSError(f"Cannot write round trace to {path}: {e}") from e
    return path


# ============================================================================
# SIMULATION ENGINE
# ============================================================================

@dataclass
class SimulationResult:
    """Per-node outputs of one simulated run."""

    results: List[PursuitResult]
    trace: RoundTrace
    rounds: int
    converged: bool
    outer_rounds: List[int]
    inner_iterations: List[List[int]]
    vote_padding: int = 0


def _map(fn: Callable, items: Sequence, pool: Optional[ThreadPoolExecutor]) -> list:
    if pool is None:
        return [fn(item) for item in items]
    return list(pool.map(fn, items))


def simulate(
    ensemble: Ensemble,
    topology: Topology,
    algorithm: str,
    round_cap: int = DEFAULT_ROUND_CAP,
    run_id: str = "",
    workers: int = 1,
) -> SimulationResult:
    """
    Run a distributed algorithm over a topology in lockstep rounds.

    Args:
        ensemble: Node problems (cardinalities K_c, K_p are read from the
            true supports of each node)
        topology: Directed connectivity, same L as the ensemble
        algorithm: "diomp", "disp" or "difrogs"
        round_cap: Round limit for disp/difrogs
        run_id: Label copied into the trace
        workers: Threads for the per-node step inside a round

    Returns:
        SimulationResult; ``converged`` is False when the round cap stopped
        the run, in which case the best triple of each node is returned
    """
    if algorithm not in DISTRIBUTED_ALGORITHMS:
        raise ValueError(f"Unknown distributed algorithm: {algorithm}. Available: {sorted(DISTRIBUTED_ALGORITHMS)}")
    if ensemble.nodes != topology.nodes:
        raise ValueError(f"Ensemble has L={ensemble.nodes} nodes, topology has L={topology.nodes}")
    if round_cap < 1:
        raise ValueError(f"Round cap must be positive, got {round_cap}")

    problems = ensemble.problems
    nodes = range(ensemble.nodes)
    k_common = len(ensemble.t_common)
    k_private = [len(p.t_private) for p in problems]
    solver = SolverRegistry.create(DISTRIBUTED_ALGORITHMS[algorithm])
    trace = RoundTrace(run_id=run_id)
    inner: List[List[int]] = [[] for _ in nodes]

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        states = _map(
            lambda l: init_node_state(l, problems[l], topology, solver, k_common + k_private[l]), nodes, pool
        )
        trace.record_round(states, problems, 0)
        for l in nodes:
            inner[l].append(states[l].inner_iterations)

        rounds = 0
        converged = True
        if algorithm == "diomp":
            for k in range(1, k_common + 1):
                board = [s.transmit for s in states]
                states = _map(
                    lambda l: diomp_node_round(
                        states[l], problems[l].A, problems[l].y, k_private[l], k_common, k,
                        {j: board[j] for j in topology.in_neighbors(l)}, solver,
                    ),
                    nodes, pool,
                )
                rounds = k
                trace.record_round(states, problems, k)
                for l in nodes:
                    inner[l].append(states[l].inner_iterations)
        else:
            while not all(s.converged for s in states):
                if rounds >= round_cap:
                    converged = False
                    pending = sum(not s.converged for s in states)
                    logger.warning(f"{algorithm}: round cap {round_cap} reached with {pending} node(s) not converged")
                    break
                board = [s.transmit for s in states]
                active = [not s.converged for s in states]
                states = _map(
                    lambda l: _reversible_node_round(
                        states[l], problems[l].A, problems[l].y, k_private[l], k_common,
                        {j: board[j] for j in topology.in_neighbors(l)}, solver,
                    ),
                    nodes, pool,
                )
                rounds += 1
                trace.record_round(states, problems, rounds)
                for l in nodes:
                    if active[l]:
                        inner[l].append(states[l].inner_iterations)
                logger.debug(f"{algorithm} round {rounds}: {sum(s.converged for s in states)}/{len(states)} converged")
    finally:
        if pool is not None:
            pool.shutdown()

    outer_rounds = [
        s.converged_round if s.converged_round is not None else rounds for s in states
    ]
    return SimulationResult(
        results=[s.reported for s in states],
        trace=trace,
        rounds=rounds,
        converged=converged,
        outer_rounds=outer_rounds,
        inner_iterations=inner,
        vote_padding=sum(s.vote_padding for s in states),
    )


__all__ = [
    "DISTRIBUTED_ALGORITHMS",
    "VoteInput",
    "vote",
    "vote_scores",
    "vote_with_padding",
    "NodeState",
    "init_node_state",
    "diomp_node_round",
    "disp_node_round",
    "difrogs_node_round",
    "TraceRecord",
    "RoundTrace",
    "write_traces",
    "SimulationResult",
    "simulate",
]
