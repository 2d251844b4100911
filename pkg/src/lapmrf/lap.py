"""LAP: one exact-ML sub-problem per maximal clique, solved independently.

For a maximal clique ``q`` the sub-problem lives on its 1-neighborhood
``A_q``. It keeps every original block inside ``A_q`` and adds structure on
the boundary ``A_q - q`` according to the strategy:

``exact``
    all subsets of each maximal clique of the marginal Markov graph on the boundary
``dense``
    all subsets of the boundary
``pairwise``
    singletons and pairs of the boundary

Sub-problems see sufficient statistics only, and the merge is a fixed-order
reduction, so results do not depend on the number of workers.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import networkx as nx
import numpy as np

from .errors import MRFError, SubproblemError
from .estimation import EstimationResult, SufficientStats, fit_ml_stats, sufficient_stats
from .graph import CliqueSystem, Graph, marginal_graph, one_neighborhood
from .optimize import OptimizerConfig
from .sampling import Dataset

STRATEGIES = ("exact", "dense", "pairwise")
MERGE_RULES = ("owner", "average")
# reject sub-problems whose brute-force work per evaluation would exceed this
_MAX_AUX_WORK = 2 ** 31


@dataclass(frozen=True)
class AuxiliarySpec:
    """Auxiliary model for one clique, in local indices ``0..len(variables)-1``.

    ``variables[i]`` is the original index of local variable ``i``;
    ``block_map`` sends local blocks that exist in the joint model to their
    original blocks.
    """

    q: tuple
    variables: tuple
    local_graph: Graph
    local_cliques: CliqueSystem
    block_map: dict
    strategy: str

    @property
    def boundary(self) -> tuple:
        qs = set(self.q)
        return tuple(v for v in self.variables if v not in qs)

    def to_global(self, block: Iterable[int]) -> tuple:
        return tuple(self.variables[i] for i in block)


def _boundary_cliques(graph: Graph, hood: tuple, boundary: tuple, strategy: str):
    if not boundary:
        return []
    if strategy == "dense":
        return [boundary]
    if strategy == "pairwise":
        return [(v,) for v in boundary] + list(combinations(boundary, 2))
    if strategy == "exact":
        mg = marginal_graph(graph, hood)
        sub = mg.to_networkx().subgraph(boundary)
        return [tuple(sorted(c)) for c in nx.find_cliques(sub)]
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def build_auxiliary(graph: Graph, cliques: CliqueSystem, q: Iterable[int],
                    strategy: str = "exact") -> AuxiliarySpec:
    q = tuple(q)
    hood = one_neighborhood(graph, cliques, q)
    inside = set(hood)
    qs = set(q)
    boundary = tuple(v for v in hood if v not in qs)
    generating = [c for c in cliques.maximal if inside.issuperset(c)]
    generating += [b for b in cliques.blocks if inside.issuperset(b)]
    generating += _boundary_cliques(graph, hood, boundary, strategy)
    local = {v: i for i, v in enumerate(hood)}
    local_gen = [tuple(local[v] for v in c) for c in generating]
    local_cliques = CliqueSystem.from_cliques(local_gen)
    edges = {e for c in local_cliques.maximal for e in combinations(c, 2)}
    local_graph = Graph.from_edges(len(hood), edges)
    block_map = {}
    for b in local_cliques.blocks:
        g = tuple(hood[i] for i in b)
        if g in cliques:
            block_map[b] = g
    return AuxiliarySpec(q, hood, local_graph, local_cliques, block_map, strategy)


@dataclass
class SubproblemResult:
    q: tuple
    weights: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    wall_time: float


def solve_subproblem(aux: AuxiliarySpec, stats: SufficientStats, backend="auto",
                     config: OptimizerConfig | None = None) -> SubproblemResult:
    """Local exact ML for one auxiliary model from its statistics alone."""
    k = len(aux.variables)
    if 2 ** k * aux.local_cliques.num_blocks > _MAX_AUX_WORK:
        raise SubproblemError(
            aux.q, f"auxiliary model over {k} variables with "
                   f"{aux.local_cliques.num_blocks} blocks is too large to enumerate",
        )
    try:
        res = fit_ml_stats(k, aux.local_cliques, stats, backend, config,
                           label=f"lap[{aux.q}]")
    except MRFError as exc:
        if isinstance(exc, SubproblemError):
            raise
        raise SubproblemError(aux.q, str(exc)) from exc
    return SubproblemResult(aux.q, res.params, res.converged, res.iterations,
                            res.final_grad_norm, res.wall_time)


def _solve_packed(args):
    return solve_subproblem(*args)


def fit_lap(graph: Graph, cliques: CliqueSystem, data: Dataset, strategy: str = "exact",
            backend="auto", config: OptimizerConfig | None = None, merge: str = "owner",
            workers: int = 1) -> EstimationResult:
    """Estimate every block by reading it off per-clique auxiliary ML fits.

    ``merge="owner"`` takes each block from the sub-problem of its owning
    maximal clique; ``merge="average"`` averages over all sub-problems whose
    clique contains the block.
    """
    if merge not in MERGE_RULES:
        raise ValueError(f"unknown merge rule {merge!r}; expected one of {MERGE_RULES}")
    if data.num_vars != graph.num_vars:
        raise ValueError("dataset width does not match the graph")
    started = time.perf_counter()
    jobs = []
    specs = []
    for q in cliques.maximal:
        aux = build_auxiliary(graph, cliques, q, strategy)
        stats = sufficient_stats(aux.local_cliques, data.columns(aux.variables))
        specs.append(aux)
        jobs.append((aux, stats, backend, config))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_packed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_solve_packed(j) for j in jobs]

    per_q = {aux.q: (aux, res) for aux, res in zip(specs, results)}
    params = np.zeros(cliques.num_blocks)
    for i, b in enumerate(cliques.blocks):
        if merge == "owner":
            sources = [cliques.owner[b]]
        else:
            sources = [q for q in cliques.maximal if set(b) <= set(q)]
        vals = []
        for q in sources:
            aux, res = per_q[q]
            local = {v: j for j, v in enumerate(aux.variables)}
            lb = tuple(local[v] for v in b)
            vals.append(res.weights[aux.local_cliques.index(lb)])
        params[i] = float(np.mean(vals))
    return EstimationResult(
        blocks=cliques.blocks,
        params=params,
        converged=all(r.converged for r in results),
        iterations=sum(r.iterations for r in results),
        final_grad_norm=max((r.grad_norm for r in results), default=0.0),
        wall_time=time.perf_counter() - started,
        estimator=f"lap_{strategy[0]}",
        subproblems=results,
    )
