"""Undirected graphs, clique systems and builders for the supported lattices.

Variables are dense integers ``0..num_vars-1``. A clique is a sorted tuple of
variable indices. A :class:`CliqueSystem` carries the factorization cliques
together with every parameter-carrying block (all non-empty subsets of the
maximal cliques), so a pairwise model has one block per node and per edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import networkx as nx

from .errors import InvalidCliqueError, InvalidDimensionError

Clique = tuple  # sorted tuple of variable indices

MODEL_KINDS = ("chain", "grid2d", "grid3d", "chimera", "rbm")


def as_clique(members: Iterable[int]) -> Clique:
    c = tuple(sorted(set(int(m) for m in members)))
    if not c:
        raise InvalidCliqueError("cliques must be non-empty")
    return c


def subsets(members: Sequence[int], max_size: int | None = None) -> list[Clique]:
    """All non-empty subsets of ``members`` ordered by size then lexicographically."""
    members = tuple(sorted(members))
    top = len(members) if max_size is None else min(max_size, len(members))
    return [c for k in range(1, top + 1) for c in combinations(members, k)]


@dataclass(frozen=True)
class Graph:
    num_vars: int
    edges: frozenset
    _neighbors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_vars < 1:
            raise InvalidDimensionError("a graph needs at least one variable")
        normalized = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on variable {u}")
            if not (0 <= u < self.num_vars and 0 <= v < self.num_vars):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.num_vars})")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))
        nbrs = [set() for _ in range(self.num_vars)]
        for u, v in normalized:
            nbrs[u].add(v)
            nbrs[v].add(u)
        object.__setattr__(self, "_neighbors", tuple(frozenset(n) for n in nbrs))

    @classmethod
    def from_edges(cls, num_vars: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        return cls(num_vars, frozenset(tuple(e) for e in edges))

    def neighbors(self, v: int) -> frozenset:
        return self._neighbors[v]

    def adjacent(self, u: int, v: int) -> bool:
        return v in self._neighbors[u]

    def is_complete(self, members: Iterable[int]) -> bool:
        members = list(members)
        return all(self.adjacent(u, v) for u, v in combinations(members, 2))

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_vars))
        g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True)
class CliqueSystem:
    """Maximal cliques, all parameter blocks, and the owning clique of each block.

    ``blocks`` are sorted by size and then lexicographically; parameter vectors
    throughout the package are numpy arrays aligned with this order.
    """

    maximal: tuple
    blocks: tuple
    owner: dict
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {b: i for i, b in enumerate(self.blocks)})

    @classmethod
    def from_cliques(cls, cliques: Iterable[Iterable[int]], graph: Graph | None = None):
        """Build from generating cliques; non-maximal and duplicate ones are dropped."""
        cands = sorted({as_clique(c) for c in cliques})
        if graph is not None:
            for c in cands:
                if not graph.is_complete(c):
                    raise InvalidCliqueError(f"clique {c} is not complete in the graph")
        sets = [frozenset(c) for c in cands]
        maximal = tuple(
            c for c, s in zip(cands, sets) if not any(s < t for t in sets)
        )
        owner = {}
        for c in maximal:  # lexicographic order, so the first owner wins
            for b in subsets(c):
                owner.setdefault(b, c)
        blocks = tuple(sorted(owner, key=lambda b: (len(b), b)))
        return cls(maximal, blocks, owner)

    @classmethod
    def from_graph(cls, graph: Graph) -> "CliqueSystem":
        """Maximal cliques of ``graph`` (Bron-Kerbosch via networkx)."""
        return cls.from_cliques(nx.find_cliques(graph.to_networkx()))

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def index(self, block: Iterable[int]) -> int:
        return self._index[tuple(block)]

    def __contains__(self, block) -> bool:
        return tuple(block) in self._index

    def variables(self) -> tuple:
        return tuple(sorted({v for c in self.maximal for v in c}))


def one_neighborhood(graph: Graph, cliques: CliqueSystem, q: Iterable[int]) -> tuple:
    """Union of every maximal clique that intersects ``q``."""
    q = tuple(q)
    if q not in set(cliques.maximal):
        raise InvalidCliqueError(f"{q} is not a maximal clique of the system")
    qs = set(q)
    out = set(q)
    for c in cliques.maximal:
        if qs.intersection(c):
            out.update(c)
    return tuple(sorted(out))


def marginal_graph(graph: Graph, keep: Iterable[int]) -> Graph:
    """Markov graph of the marginal over ``keep``.

    Kept vertices ``u, v`` are joined when they are adjacent in ``graph`` or a
    path links them through vertices that are all summed out. The result keeps
    the original variable indexing; summed-out vertices become isolated.
    """
    keep = set(int(v) for v in keep)
    if not keep <= set(range(graph.num_vars)):
        raise ValueError("keep must be a subset of the graph's variables")
    edges = {e for e in graph.edges if e[0] in keep and e[1] in keep}
    seen = set()
    for start in range(graph.num_vars):
        if start in keep or start in seen:
            continue
        # exterior component containing ``start`` and its kept boundary
        boundary = set()
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in graph.neighbors(v):
                if w in keep:
                    boundary.add(w)
                elif w not in seen:
                    seen.add(w)
                    stack.append(w)
        edges.update(combinations(sorted(boundary), 2))
    return Graph(graph.num_vars, frozenset(edges))


def chain(n: int) -> Graph:
    _check_dims(n)
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def grid2d(rows: int, cols: int) -> Graph:
    """4-neighborhood grid, row-major indexing."""
    _check_dims(rows, cols)
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


def grid3d(nx_: int, ny: int, nz: int) -> Graph:
    """6-neighborhood lattice; variable ``(i, j, k)`` has index ``(i*ny + j)*nz + k``."""
    _check_dims(nx_, ny, nz)
    idx = lambda i, j, k: (i * ny + j) * nz + k  # noqa: E731
    edges = []
    for i in range(nx_):
        for j in range(ny):
            for k in range(nz):
                if i + 1 < nx_:
                    edges.append((idx(i, j, k), idx(i + 1, j, k)))
                if j + 1 < ny:
                    edges.append((idx(i, j, k), idx(i, j + 1, k)))
                if k + 1 < nz:
                    edges.append((idx(i, j, k), idx(i, j, k + 1)))
    return Graph.from_edges(nx_ * ny * nz, edges)


def chimera(m: int, n: int, l: int) -> Graph:  # noqa: E741
    """An ``m x n`` grid of K_{l,l} cells.

    Cell ``(i, j)`` owns indices ``(i*n + j)*2l`` onward: the first ``l`` form
    the vertical shore (coupled to the same position in cell ``(i+1, j)``), the
    next ``l`` the horizontal shore (coupled to cell ``(i, j+1)``).
    """
    _check_dims(m, n, l)

    def base(i, j):
        return (i * n + j) * 2 * l

    edges = []
    for i in range(m):
        for j in range(n):
            b = base(i, j)
            for a in range(l):
                for c in range(l):
                    edges.append((b + a, b + l + c))
                if i + 1 < m:
                    edges.append((b + a, base(i + 1, j) + a))
                if j + 1 < n:
                    edges.append((b + l + a, base(i, j + 1) + l + a))
    return Graph.from_edges(m * n * 2 * l, edges)


def rbm(visible: int, hidden: int) -> Graph:
    """Complete bipartite graph; visibles first, then hiddens."""
    _check_dims(visible, hidden)
    edges = [(v, visible + h) for v in range(visible) for h in range(hidden)]
    return Graph.from_edges(visible + hidden, edges)


_BUILDERS = {"chain": (chain, 1), "grid2d": (grid2d, 2), "grid3d": (grid3d, 3),
             "chimera": (chimera, 3), "rbm": (rbm, 2)}


def build_model(kind: str, dims: Sequence[int]) -> tuple[Graph, CliqueSystem]:
    """Graph and pairwise clique system for one of :data:`MODEL_KINDS`."""
    try:
        builder, arity = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != arity:
        raise InvalidDimensionError(f"{kind} takes {arity} dimension(s), got {len(dims)}")
    graph = builder(*dims)
    cliques = CliqueSystem.from_cliques(
        [e for e in graph.edges]
        + [(v,) for v in range(graph.num_vars) if not graph.neighbors(v)]
    )
    return graph, cliques


def _check_dims(*dims):
    for d in dims:
        if int(d) < 1:
            raise InvalidDimensionError(f"dimension {d} must be at least 1")
