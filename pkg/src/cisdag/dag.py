"""DAG structure: topological orderings, v-structures, and equivalence classes.

Nodes are ``0 .. m-1``; an edge ``(i, j)`` means ``i -> j``. Two closure
operations generate equivalence classes: flips of covered edges give the
Markov equivalence class, flips of trivially covered edges give the class of
DAGs with the same positive (nonnegative-coefficient) Gaussian model.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .exceptions import CycleError, DimensionMismatch, DimensionTooLarge
from .matrix import DEFAULT_TOL, Tolerance, is_nonpositive

__all__ = [
    "Dag",
    "VStructure",
    "MAX_CLASS_DIM",
    "topological_orderings",
    "v_structures",
    "markov_equivalent",
    "covered_edges",
    "trivially_covered_edges",
    "markov_class",
    "cis_markov_class",
    "forbidden_last_nodes",
]

MAX_CLASS_DIM = 10

Edge = tuple[int, int]


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes ``0 .. m-1``.

    Edges are stored as a sorted tuple, so equal graphs hash equally.
    """

    m: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a DAG needs at least one node")
        raw = [(int(i), int(j)) for i, j in self.edges]
        edges = tuple(sorted(set(raw)))
        if len(edges) != len(raw):
            raise ValueError("duplicate edges")
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise DimensionMismatch(f"edge {(i, j)} out of range for {self.m} nodes")
        object.__setattr__(self, "edges", edges)
        if self.topological_order() is None:
            raise CycleError()

    @classmethod
    def from_adjacency(cls, A) -> "Dag":
        A = np.asarray(A)
        rows, cols = np.nonzero(A)
        return cls(A.shape[0], tuple(zip(rows.tolist(), cols.tolist())))

    def parents(self, j: int) -> frozenset[int]:
        return frozenset(i for i, k in self.edges if k == j)

    def children(self, i: int) -> frozenset[int]:
        return frozenset(k for j, k in self.edges if j == i)

    def adjacent(self, i: int, j: int) -> bool:
        return (i, j) in self.edges or (j, i) in self.edges

    def skeleton(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)

    def topological_order(self) -> tuple[int, ...] | None:
        """One topological ordering (Kahn, smallest ready node first), or ``None`` if cyclic."""
        indeg = [0] * self.m
        for _, j in self.edges:
            indeg[j] += 1
        ready = [v for v in range(self.m) if indeg[v] == 0]
        order = []
        while ready:
            ready.sort()
            v = ready.pop(0)
            order.append(v)
            for i, j in self.edges:
                if i == v:
                    indeg[j] -= 1
                    if indeg[j] == 0:
                        ready.append(j)
        return tuple(order) if len(order) == self.m else None

    def is_topological(self, ordering) -> bool:
        pos = {v: p for p, v in enumerate(ordering)}
        return len(pos) == self.m and all(pos[i] < pos[j] for i, j in self.edges)

    def flip(self, edge: Edge) -> "Dag":
        i, j = edge
        if edge not in self.edges:
            raise ValueError(f"{i}->{j} is not an edge")
        return Dag(self.m, tuple(e for e in self.edges if e != edge) + ((j, i),))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.m, self.m), dtype=int)
        for i, j in self.edges:
            A[i, j] = 1
        return A


@dataclass(frozen=True, order=True)
class VStructure:
    """Unshielded collider ``left -> collider <- right`` with ``left < right``."""

    left: int
    collider: int
    right: int


def topological_orderings(g: Dag, max_dim: int = MAX_CLASS_DIM) -> list[tuple[int, ...]]:
    """All topological orderings of ``g`` in lexicographic order."""
    if g.m > max_dim:
        raise DimensionTooLarge(f"{g.m} nodes exceeds enumeration cap {max_dim}")
    parents = [g.parents(v) for v in range(g.m)]
    out: list[tuple[int, ...]] = []

    def extend(prefix: list[int], placed: set[int]):
        if len(prefix) == g.m:
            out.append(tuple(prefix))
            return
        for v in range(g.m):
            if v not in placed and parents[v] <= placed:
                prefix.append(v)
                placed.add(v)
                extend(prefix, placed)
                placed.discard(v)
                prefix.pop()

    extend([], set())
    return out


def v_structures(g: Dag) -> set[VStructure]:
    found = set()
    for k in range(g.m):
        pa = sorted(g.parents(k))
        for a in range(len(pa)):
            for b in range(a + 1, len(pa)):
                i, j = pa[a], pa[b]
                if not g.adjacent(i, j):
                    found.add(VStructure(i, k, j))
    return found


def markov_equivalent(g: Dag, h: Dag) -> bool:
    """Same skeleton and same v-structures."""
    if g.m != h.m:
        raise DimensionMismatch(f"graphs have {g.m} and {h.m} nodes")
    return g.skeleton() == h.skeleton() and v_structures(g) == v_structures(h)


def covered_edges(g: Dag) -> set[Edge]:
    """Edges ``i -> j`` with ``Pa(i) = Pa(j) - {i}`` whose reversal stays acyclic."""
    out = set()
    for i, j in g.edges:
        if g.parents(i) == g.parents(j) - {i}:
            try:
                g.flip((i, j))
            except CycleError:
                continue
            out.add((i, j))
    return out


def trivially_covered_edges(g: Dag) -> set[Edge]:
    """Edges ``i -> j`` where ``i`` has no parents and is the only parent of ``j``."""
    return {(i, j) for i, j in g.edges if not g.parents(i) and g.parents(j) == {i}}


def _closure(g: Dag, moves: Callable[[Dag], Iterable[Edge]], max_dim: int, strategy: str) -> set[Dag]:
    if g.m > max_dim:
        raise DimensionTooLarge(f"{g.m} nodes exceeds class enumeration cap {max_dim}")
    if strategy not in ("bfs", "dfs"):
        raise ValueError("strategy must be 'bfs' or 'dfs'")
    seen = {g}
    frontier = deque([g])
    while frontier:
        cur = frontier.popleft() if strategy == "bfs" else frontier.pop()
        for e in sorted(moves(cur)):
            nxt = cur.flip(e)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def markov_class(g: Dag, max_dim: int = MAX_CLASS_DIM, strategy: str = "bfs") -> set[Dag]:
    """Markov equivalence class of ``g``, generated by covered edge flips."""
    return _closure(g, covered_edges, max_dim, strategy)


def cis_markov_class(g: Dag, max_dim: int = MAX_CLASS_DIM, strategy: str = "bfs") -> set[Dag]:
    """DAGs with the same nonnegative-coefficient Gaussian model as ``g``.

    Generated by flips of trivially covered edges; always a subset of
    :func:`markov_class`.
    """
    return _closure(g, trivially_covered_edges, max_dim, strategy)


def forbidden_last_nodes(g: Dag, cp, tol: Tolerance = DEFAULT_TOL) -> set[int]:
    """Nodes that cannot be last in any CIS ordering, certified by v-structures.

    For a model with nonnegative coefficients on ``g``, a v-structure
    ``i -> k <- j`` with ``K[i, j] > 0`` rules out ``i`` and ``j`` as the last
    variable. The result is sound but not complete.

    A :class:`UserWarning` is issued when ``cp`` does not look like a
    nonnegative-coefficient model on ``g`` (negative coefficient under a
    topological ordering of ``g``), since the certificate then does not apply.
    """
    from .model import precision_to_sem

    if cp.dim != g.m:
        raise DimensionMismatch(f"model has {cp.dim} variables, graph has {g.m} nodes")
    sem = precision_to_sem(cp, g.topological_order(), tol)
    lam = sem.lam
    # standardized coefficients lam[i, j] * sd_j / sd_i
    sd = np.sqrt(cp.sigma.diagonal())
    scale = np.outer(1.0 / sd, sd)
    if np.any(lam * scale < -tol.threshold(1.0)):
        warnings.warn("model has negative SEM coefficients under a topological ordering of the graph", stacklevel=2)
    K = cp.precision
    out = set()
    for vs in v_structures(g):
        i, j = vs.left, vs.right
        if not is_nonpositive(K[i, j], K[i, i], K[j, j], tol):
            out.update((i, j))
    return out


def iter_edges_one_based(g: Dag) -> Iterator[tuple[int, int]]:
    for i, j in g.edges:
        yield i + 1, j + 1
