"""
Network - directed connectivity among L sensor nodes

Topologies store external out-edges only. Every node is implicitly
connected with itself, so ``in_neighbors(l)`` and ``out_neighbors(l)``
always contain ``l``.

Constructors:
- ring_topology(L, d)        -> C_d, one-way edges to the next d nodes
- random_topology(L, d, rng) -> C_d,rand, ring of degree 1 plus d-1 random edges
- watts_strogatz(L, q, p, rng) -> small-world graph, both directions per link
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Topology:
    """Immutable directed graph over nodes 0..L-1 (self-loops implicit)."""

    nodes: int
    out_edges: Tuple[Tuple[int, ...], ...]
    label: str = ""

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError(f"Topology needs at least one node, got L={self.nodes}")
        if len(self.out_edges) != self.nodes:
            raise ValueError(f"out_edges lists {len(self.out_edges)} nodes for L={self.nodes}")
        normalized = []
        for node, targets in enumerate(self.out_edges):
            targets = tuple(int(t) for t in targets)
            if len(set(targets)) != len(targets):
                raise ValueError(f"Node {node + 1} has duplicate out-edges: {[t + 1 for t in targets]}")
            if any(t == node for t in targets):
                raise ValueError(f"Node {node + 1} lists itself as an explicit out-edge")
            if any(t < 0 or t >= self.nodes for t in targets):
                raise ValueError(f"Node {node + 1} has an out-edge outside [1, {self.nodes}]")
            normalized.append(tuple(sorted(targets)))
        object.__setattr__(self, "out_edges", tuple(normalized))

    @cached_property
    def _in_edges(self) -> Tuple[Tuple[int, ...], ...]:
        incoming: List[List[int]] = [[] for _ in range(self.nodes)]
        for source, targets in enumerate(self.out_edges):
            for target in targets:
                incoming[target].append(source)
        return tuple(tuple(sorted(sources)) for sources in incoming)

    def out_neighbors(self, node: int) -> Tuple[int, ...]:
        """L_out(node), self included."""
        return tuple(sorted(self.out_edges[node] + (node,)))

    def in_neighbors(self, node: int) -> Tuple[int, ...]:
        """L_in(node), self included."""
        return tuple(sorted(self._in_edges[node] + (node,)))

    def degree(self, node: int) -> int:
        """External out-degree."""
        return len(self.out_edges[node])

    def in_degree(self, node: int) -> int:
        return len(self._in_edges[node])

    def edges(self) -> FrozenSet[Tuple[int, int]]:
        """External directed edges as (source, target) pairs."""
        return frozenset((s, t) for s, targets in enumerate(self.out_edges) for t in targets)

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.nodes))
        graph.add_edges_from(self.edges())
        return graph


# ============================================================================
# CONSTRUCTORS
# ============================================================================

def ring_topology(nodes: int, degree: int) -> Topology:
    """
    C_d: node l has one-way edges to l+1, ..., l+d (mod L).

    d = 0 is the disconnected network, d = L-1 the fully connected one.

    Raises:
        ValueError: if d is outside [0, L-1]
    """
    if nodes < 1:
        raise ValueError(f"Ring topology needs L >= 1, got {nodes}")
    if not 0 <= degree <= nodes - 1:
        raise ValueError(f"Ring degree d={degree} outside [0, {nodes - 1}] for L={nodes}")
    out_edges = tuple(
        tuple((node + step) % nodes for step in range(1, degree + 1)) for node in range(nodes)
    )
    return Topology(nodes=nodes, out_edges=out_edges, label=f"ring:{degree}")


def disconnected(nodes: int) -> Topology:
    return ring_topology(nodes, 0)


def fully_connected(nodes: int) -> Topology:
    return ring_topology(nodes, nodes - 1)


def random_topology(nodes: int, degree: int, rng: np.random.Generator) -> Topology:
    """
    C_d,rand: ring of degree 1, then d-1 distinct random out-edges per node.

    Added edges never repeat the ring edge nor point to the node itself.

    Raises:
        ValueError: if d is outside [2, L-1]
    """
    if not 2 <= degree <= nodes - 1:
        raise ValueError(f"Random topology degree d={degree} outside [2, {nodes - 1}] for L={nodes}")
    out_edges = []
    for node in range(nodes):
        ring_target = (node + 1) % nodes
        candidates = np.array([t for t in range(nodes) if t != node and t != ring_target], dtype=np.int64)
        extra = rng.choice(candidates, size=degree - 1, replace=False)
        out_edges.append((ring_target,) + tuple(int(t) for t in extra))
    return Topology(nodes=nodes, out_edges=tuple(out_edges), label=f"rand:{degree}")


def watts_strogatz(nodes: int, q: int, p: float, rng: np.random.Generator) -> Topology:
    """
    Small-world graph: ring lattice with q neighbours per side, each link
    rewired with probability p, every link used in both directions.

    Built with ``nx.watts_strogatz_graph(L, 2q, p)`` seeded from ``rng``;
    rewiring keeps the number of links at exactly L*q.

    Raises:
        ValueError: if q is outside [1, (L-1)/2] or p outside [0, 1]
    """
    if q < 1 or 2 * q > nodes - 1:
        raise ValueError(f"Watts-Strogatz q={q} outside [1, {(nodes - 1) // 2}] for L={nodes}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Watts-Strogatz rewiring probability p={p} outside [0, 1]")

    graph = nx.watts_strogatz_graph(nodes, 2 * q, p, seed=int(rng.integers(2**32)))
    lattice = {frozenset((node, (node + step) % nodes)) for node in range(nodes) for step in range(1, q + 1)}
    rewired = sum(1 for edge in graph.edges() if frozenset(edge) not in lattice)
    logger.debug(f"Watts-Strogatz L={nodes} q={q} p={p}: {rewired} links rewired")

    out_edges = tuple(tuple(sorted(graph.neighbors(node))) for node in range(nodes))
    return Topology(nodes=nodes, out_edges=out_edges, label=f"watts:{q},{p:g}")


# ============================================================================
# ADJACENCY TEXT
# ============================================================================

def to_adjacency_text(topology: Topology) -> str:
    """One line per node: ``node: out1 out2 ...`` (1-based, self implicit)."""
    lines = []
    for node, targets in enumerate(topology.out_edges):
        lines.append(f"{node + 1}: " + " ".join(str(t + 1) for t in targets))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def from_adjacency_text(text: str, label: str = "") -> Topology:
    """
    Parse the adjacency-list text format. Blank lines and ``#`` comments are
    skipped; a node listing itself is accepted and ignored.

    Raises:
        ValueError: on malformed lines or missing/duplicate node ids
    """
    entries = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, tail = line.partition(":")
        if not sep:
            raise ValueError(f"Line {number}: expected 'node: targets', got {raw!r}")
        try:
            node = int(head)
            targets = [int(t) for t in tail.split()]
        except ValueError as e:
            raise ValueError(f"Line {number}: non-integer node id in {raw!r}") from e
        if node in entries:
            raise ValueError(f"Line {number}: node {node} listed twice")
        entries[node] = [t for t in targets if t != node]

    nodes = len(entries)
    if sorted(entries) != list(range(1, nodes + 1)):
        raise ValueError(f"Node ids must be exactly 1..{nodes}, got {sorted(entries)}")
    out_edges = tuple(tuple(t - 1 for t in entries[node]) for node in range(1, nodes + 1))
    return Topology(nodes=nodes, out_edges=out_edges, label=label)


def save_topology(topology: Topology, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.write_text(to_adjacency_text(topology), encoding="utf-8")
    except OSError as e:
        raise OSError(f"Cannot write topology to {path}: {e}") from e
    return path


def load_topology(path: Union[str, Path]) -> Topology:
    path = Path(path)
    return from_adjacency_text(path.read_text(encoding="utf-8"), label=f"file:{path.name}")


def is_strongly_connected(topology: Topology) -> bool:
    return topology.nodes == 1 or nx.is_strongly_connected(topology.to_networkx())


__all__ = [
    "Topology",
    "ring_topology",
    "disconnected",
    "fully_connected",
    "random_topology",
    "watts_strogatz",
    "to_adjacency_text",
    "from_adjacency_text",
    "save_topology",
    "load_topology",
    "is_strongly_connected",
]
