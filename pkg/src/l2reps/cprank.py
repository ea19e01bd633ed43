"""Completely positive matrices built from graph incidence matrices.

For a graph without triangles the CP-rank of ``E^T E`` equals the number of
edges; the complete bipartite graph then gives ``B_N`` with CP-rank ``N^2/4``.
"""
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, PreconditionError
from .linalg_core import as_matrix, numerical_rank
from .network import RELU, NetworkParams


@dataclass(frozen=True)
class GraphSpec:
    num_vertices: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(tuple(sorted((int(v), int(w)))) for v, w in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.num_vertices < 0:
            raise InvalidInputError("negative vertex count")
        for v, w in edges:
            if v == w:
                raise InvalidInputError(f"self-loop at vertex {v}")
            if not (0 <= v < self.num_vertices and 0 <= w < self.num_vertices):
                raise InvalidInputError(f"edge ({v}, {w}) out of range")
        if len(set(edges)) != len(edges):
            raise InvalidInputError("duplicate edges")

    @property
    def num_edges(self):
        return len(self.edges)

    def adjacency(self):
        a = np.zeros((self.num_vertices, self.num_vertices), dtype=bool)
        for v, w in self.edges:
            a[v, w] = a[w, v] = True
        return a


def complete_bipartite_graph(n):
    """``K_{n/2, n/2}`` on vertices ``0..n-1``, halves ``[0, n/2)`` and ``[n/2, n)``."""
    if n < 2 or n % 2:
        raise PreconditionError(f"need an even N >= 2, got {n}")
    h = n // 2
    return GraphSpec(n, tuple((v, h + w) for v in range(h) for w in range(h)))


def incidence_matrix(g):
    """``k x N`` edge-vertex incidence matrix: ``E[e, v] = 1`` iff ``v`` is an endpoint of ``e``."""
    e = np.zeros((g.num_edges, g.num_vertices))
    for row, (v, w) in enumerate(g.edges):
        e[row, v] = e[row, w] = 1.0
    return e


def is_triangle_free(g):
    # any clique on >= 3 vertices contains a triangle
    a = g.adjacency()
    for u, v, w in combinations(range(g.num_vertices), 3):
        if a[u, v] and a[v, w] and a[u, w]:
            return False
    return True


def cp_rank_lower_bound(A, graph=None):
    """Lower bound on the CP-rank of ``A``.

    With a triangle-free ``graph`` such that ``A = E^T E`` the bound is exact
    and equals the edge count. Otherwise it is the ordinary rank.
    """
    A = as_matrix(A)
    if graph is None:
        return numerical_rank(A, 1e-8)
    e = incidence_matrix(graph)
    if A.shape != (graph.num_vertices,) * 2 or not np.allclose(A, e.T @ e, rtol=0, atol=1e-10):
        raise InvalidInputError("A does not equal E^T E for the given graph")
    if is_triangle_free(graph):
        return graph.num_edges
    return numerical_rank(A, 1e-8)


def bipartite_matrix(n):
    """``B_N = [[N/2 I, 1], [1, N/2 I]]``, the Gram matrix of ``K_{N/2,N/2}``'s incidence matrix."""
    if n < 2 or n % 2:
        raise PreconditionError(f"need an even N >= 2, got {n}")
    h = n // 2
    eye = (n / 2) * np.eye(h)
    ones = np.ones((h, h))
    return np.block([[eye, ones], [ones, eye]])


def near_optimal_network(n):
    """Shallow ReLU net with ``W_1 = sqrt(N/2) I`` and ``W_2 = sqrt(2/N) B_N``.

    It maps ``X = I_N`` onto ``B_N`` with squared norm ``N^2 + N``, only ``N``
    above the representation cost, using ``N`` hidden neurons.
    """
    b = bipartite_matrix(n)
    zero = np.zeros((n, 1))
    w1 = np.hstack([np.sqrt(n / 2) * np.eye(n), zero])
    w2 = np.hstack([np.sqrt(2 / n) * b, zero])
    return NetworkParams([w1, w2], 0.0, RELU)


def row_supports(B, tol=1e-8):
    """Number of entries above ``tol * max|B|`` in each row of ``B``."""
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return np.zeros(0, dtype=int)
    cut = tol * np.max(np.abs(B))
    return np.count_nonzero(np.abs(B) > cut, axis=1)


def parse_edge_list(text):
    """Parse ``"N k"`` followed by ``k`` lines ``"v w"`` (0-indexed)."""
    lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidInputError("empty edge list")
    try:
        n, k = (int(t) for t in lines[0].split())
        edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"malformed edge list: {exc}") from None
    if len(edges) != k or any(len(e) != 2 for e in edges):
        raise InvalidInputError(f"header announces {k} edges, found {len(edges)}")
    return GraphSpec(n, tuple(edges))


def read_edge_list(path):
    return parse_edge_list(Path(path).read_text())


def format_edge_list(g):
    return "\n".join([f"{g.num_vertices} {g.num_edges}"] + [f"{v} {w}" for v, w in g.edges]) + "\n"


def write_edge_list(g, path):
    Path(path).write_text(format_edge_list(g))
