"""Communication graphs and doubly-stochastic combination matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import TopologyError

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Graph:
    """Undirected graph over ``node_count`` agents.

    ``edges`` holds each pair once as ``(i, j)`` with ``i < j``.
    """

    node_count: int
    edges: frozenset = frozenset()
    self_loops: frozenset = field(default=frozenset())

    def __post_init__(self):
        if self.node_count < 1:
            raise TopologyError(f"node_count must be >= 1, got {self.node_count}")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            for v in (i, j):
                if not 0 <= v < self.node_count:
                    raise TopologyError(f"edge endpoint {v} outside [0, {self.node_count})")
            if i != j:
                norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "self_loops", frozenset(int(v) for v in self.self_loops))

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]]) -> "Graph":
        return cls(node_count, frozenset(tuple(e) for e in edges))

    @classmethod
    def complete(cls, node_count: int) -> "Graph":
        return cls(node_count, frozenset((i, j) for i in range(node_count) for j in range(i + 1, node_count)))

    @classmethod
    def ring(cls, node_count: int) -> "Graph":
        if node_count < 3:
            return cls.path(node_count)
        return cls(node_count, frozenset((i, (i + 1) % node_count) for i in range(node_count)))

    @classmethod
    def path(cls, node_count: int) -> "Graph":
        return cls(node_count, frozenset((i, i + 1) for i in range(node_count - 1)))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.node_count, self.node_count), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def unreachable_pair(self):
        """Return some ``(i, j)`` with no path between them, or ``None``."""
        return _unreachable_pair(self.adjacency())

    def is_connected(self) -> bool:
        return self.unreachable_pair() is None


def _unreachable_pair(support: np.ndarray):
    n = support.shape[0]
    if n == 1:
        return None
    count, labels = connected_components(csr_matrix(support.astype(np.int8)), directed=True, connection="strong")
    if count == 1:
        return None
    other = int(np.flatnonzero(labels != labels[0])[0])
    return (0, other)


def graph_from_spec(spec, node_count: int) -> Graph:
    """Build a graph from a config value: a name or an explicit edge list."""
    if isinstance(spec, str):
        builders = {"complete": Graph.complete, "ring": Graph.ring, "path": Graph.path}
        try:
            return builders[spec](node_count)
        except KeyError:
            raise TopologyError(f"unknown graph {spec!r}; expected one of {sorted(builders)} or an edge list") from None
    if isinstance(spec, dict):
        spec = spec.get("edges", [])
    return Graph.from_edges(node_count, spec)


def build_metropolis_matrix(graph: Graph) -> np.ndarray:
    """Metropolis-Hastings weights ``1 / (1 + max(deg l, deg k))`` on each edge.

    The diagonal absorbs the remainder of each column, so the result is
    symmetric and doubly stochastic with a strictly positive diagonal.
    """
    pair = graph.unreachable_pair()
    if pair is not None:
        raise TopologyError(f"graph is not connected: no path between agents {pair[0]} and {pair[1]}")
    deg = graph.degrees()
    K = graph.node_count
    C = np.zeros((K, K))
    for i, j in graph.edges:
        C[i, j] = C[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    C[np.diag_indices(K)] = 1.0 - C.sum(axis=0)
    return C


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def validate_combination_matrix(C, graph: Graph | None = None, tol: float = STOCHASTIC_TOL) -> ValidationReport:
    """Check a combination matrix against the row/column-stochastic, support,
    connectivity and self-loop requirements. Never raises on a bad matrix."""
    C = np.asarray(C, dtype=float)
    report = ValidationReport()
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        report.violations.append(f"matrix must be square, got shape {C.shape}")
        return report
    K = C.shape[0]
    if graph is not None and graph.node_count != K:
        report.violations.append(f"matrix is {K}x{K} but graph has {graph.node_count} nodes")
        return report
    if not np.all(np.isfinite(C)):
        report.violations.append("matrix has non-finite entries")
        return report
    neg = np.argwhere(C < 0)
    if len(neg):
        i, j = neg[0]
        report.violations.append(f"negative weight c[{i}][{j}] = {C[i, j]:.6g}")
    for i, total in enumerate(C.sum(axis=1)):
        if abs(total - 1.0) > tol:
            report.violations.append(f"row {i} sums to {total:.12g}, not 1")
    for j, total in enumerate(C.sum(axis=0)):
        if abs(total - 1.0) > tol:
            report.violations.append(f"column {j} sums to {total:.12g}, not 1")
    if graph is not None:
        allowed = graph.adjacency() | np.eye(K, dtype=bool)
        outside = np.argwhere((C != 0) & ~allowed)
        for i, j in outside:
            report.violations.append(f"weight c[{i}][{j}] = {C[i, j]:.6g} on a pair that is not an edge")
    pair = _unreachable_pair(C > 0)
    if pair is not None:
        report.violations.append(
            f"graph not effectively connected under the support of C: agents {pair[0]} and {pair[1]} never mix"
        )
    if not np.any(np.diag(C) > 0):
        report.violations.append("no agent has a positive self-loop weight")
    return report


def second_eigenvalue_magnitude(C) -> float:
    """Second-largest eigenvalue magnitude; governs how fast diffusion mixes."""
    C = np.asarray(C, dtype=float)
    report = validate_combination_matrix(C)
    stochastic = [v for v in report.violations if "sums to" in v or "negative" in v or "square" in v]
    if stochastic:
        raise TopologyError("not a doubly-stochastic matrix: " + "; ".join(stochastic))
    if C.shape[0] == 1:
        return 0.0
    if np.allclose(C, C.T, atol=0.0, rtol=0.0):
        mags = np.sort(np.abs(np.linalg.eigvalsh(C)))[::-1]
    else:
        mags = np.sort(np.abs(np.linalg.eigvals(C)))[::-1]
    return float(min(max(mags[1], 0.0), 1.0))
