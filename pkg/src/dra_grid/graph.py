"""Strategy connectivity graphs and their Laplacians.

Each PEV's strategy nodes communicate over an undirected, unweighted
graph; the allocation dynamics move state along the negative graph
Laplacian of the node outputs. Connectivity is what guarantees that
equal outputs are the only rest points, so it is checked explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, SizeError


@dataclass(frozen=True, eq=False)
class StrategyGraph:
    """Undirected communication graph over one PEV's strategy nodes.

    adjacency is a {0,1} matrix with zero diagonal; laplacian is
    degree minus adjacency, so its rows sum to zero.
    """

    n_nodes: int
    adjacency: np.ndarray
    laplacian: np.ndarray = field(init=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64)
        if adj.shape != (self.n_nodes, self.n_nodes):
            raise ShapeError(f"adjacency shape {adj.shape} != ({self.n_nodes}, {self.n_nodes})")
        if not np.array_equal(adj, adj.T):
            raise ShapeError("adjacency must be symmetric (channels are bidirectional)")
        if np.any(np.diag(adj) != 0.0):
            raise ShapeError("adjacency diagonal must be zero (no self-loops)")
        lap = np.diag(adj.sum(axis=1)) - adj
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "laplacian", lap)


def ring_graph(n: int) -> StrategyGraph:
    """Cycle graph over n nodes; for n == 2 a single edge."""
    if n < 2:
        raise SizeError(f"ring graph needs at least 2 nodes, got {n}")
    adj = np.zeros((n, n))
    for k in range(n):
        adj[k, (k + 1) % n] = 1.0
        adj[(k + 1) % n, k] = 1.0
    return StrategyGraph(n, adj)


def complete_graph(n: int) -> StrategyGraph:
    """All-to-all graph over n nodes, used for sensitivity studies."""
    if n < 2:
        raise SizeError(f"complete graph needs at least 2 nodes, got {n}")
    adj = np.ones((n, n)) - np.eye(n)
    return StrategyGraph(n, adj)


def build_graph(n: int, kind: str = "ring") -> StrategyGraph:
    """Construct the per-PEV strategy graph of the requested topology."""
    if kind == "ring":
        return ring_graph(n)
    if kind == "complete":
        return complete_graph(n)
    raise ValueError(f"unknown graph kind {kind!r} (expected 'ring' or 'complete')")


def is_connected(g: StrategyGraph) -> bool:
    """Breadth-first reachability of every node from node 0."""
    n = g.n_nodes
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for k in frontier:
            for j in np.nonzero(g.adjacency[k])[0]:
                if not seen[j]:
                    seen[j] = True
                    nxt.append(int(j))
        frontier = nxt
    return bool(seen.all())


def quadratic_form(g: StrategyGraph, v: np.ndarray) -> float:
    """v' L v computed as the sum of a_kj (v_k - v_j)^2 over edges.

    Nonnegative for any v; zero exactly on constant vectors. Used as a
    positive-semidefiniteness diagnostic for the consensus dynamics.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (g.n_nodes,):
        raise ShapeError(f"vector length {v.shape} != ({g.n_nodes},)")
    total = 0.0
    for k in range(g.n_nodes):
        for j in range(k + 1, g.n_nodes):
            if g.adjacency[k, j] != 0.0:
                total += g.adjacency[k, j] * (v[k] - v[j]) ** 2
    return float(total)
