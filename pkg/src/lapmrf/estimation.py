"""Sufficient statistics, likelihood objectives, and the ML and PL estimators."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import EmptyDatasetError
from .graph import CliqueSystem, Graph
from .inference import make_engine
from .model import LogLinearModel, write_model
from .optimize import OptimizerConfig, maximize
from .sampling import Dataset

log = logging.getLogger(__name__)

# histogram route for statistics when the scope is at most this wide
_HISTOGRAM_MAX_VARS = 16


@dataclass(frozen=True)
class SufficientStats:
    blocks: tuple
    block_means: np.ndarray
    n: int

    def as_dict(self) -> dict:
        return dict(zip(self.blocks, self.block_means.tolist()))


@dataclass
class EstimationResult:
    blocks: tuple
    params: np.ndarray
    converged: bool
    iterations: int
    final_grad_norm: float
    wall_time: float
    estimator: str = ""
    subproblems: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(zip(self.blocks, self.params.tolist()))


def sufficient_stats(cliques: CliqueSystem, data: Dataset,
                     scope: Iterable[int] | None = None) -> SufficientStats:
    """Empirical block means, touching only the data columns in ``scope``.

    With ``scope`` given only blocks inside it are returned. Narrow scopes
    are summarized by one pass that histograms the joint column pattern; each
    block mean is then a superset sum over the histogram.
    """
    if len(data) == 0:
        raise EmptyDatasetError("cannot compute statistics of an empty dataset")
    if scope is None:
        cols = tuple(range(data.num_vars))
        blocks = cliques.blocks
    else:
        cols = tuple(sorted(set(scope)))
        inside = set(cols)
        blocks = tuple(b for b in cliques.blocks if inside.issuperset(b))
    w = data.normalized_weights()
    pos = {v: i for i, v in enumerate(cols)}
    x = data.samples[:, list(cols)]
    k = len(cols)
    if k <= _HISTOGRAM_MAX_VARS:
        codes = x.astype(np.int64) @ (1 << np.arange(k - 1, -1, -1, dtype=np.int64))
        hist = np.bincount(codes, weights=w, minlength=2 ** k).reshape((2,) * k)
        for axis in range(k):
            lo = [slice(None)] * k
            hi = [slice(None)] * k
            lo[axis], hi[axis] = 0, 1
            hist[tuple(lo)] += hist[tuple(hi)]
        flat = hist.ravel()
        masks = [sum(1 << (k - 1 - pos[v]) for v in b) for b in blocks]
        means = flat[masks]
    else:
        means = np.array([w @ np.all(x[:, [pos[v] for v in b]] == 1, axis=1) for b in blocks])
    return SufficientStats(blocks, np.clip(means, 0.0, 1.0), len(data))


class MLObjective:
    """Scaled log-likelihood ``w . means - log Z(w)`` and its gradient."""

    def __init__(self, num_vars: int, blocks, stats: SufficientStats, backend="auto"):
        if tuple(stats.blocks) != tuple(blocks):
            lookup = stats.as_dict()
            means = np.array([lookup[b] for b in blocks])
        else:
            means = stats.block_means
        self.means = np.asarray(means, dtype=float)
        self.engine = make_engine(num_vars, blocks, backend) if isinstance(backend, str) else backend

    def __call__(self, weights):
        res = self.engine.run(weights)
        return float(weights @ self.means) - res.log_z, self.means - res.feature_means


def ml_objective_grad(model: LogLinearModel, stats: SufficientStats, backend="auto"):
    """Value and gradient (aligned with ``model.cliques.blocks``) of the scaled log-likelihood."""
    return MLObjective(model.num_vars, model.cliques.blocks, stats, backend)(model.weights)


class PLObjective:
    """Scaled pseudo-log-likelihood over a fixed dataset."""

    def __init__(self, cliques: CliqueSystem, data: Dataset):
        if len(data) == 0:
            raise EmptyDatasetError("pseudo-likelihood needs at least one sample")
        x = data.samples.astype(float)
        self.x = x
        self.w = data.normalized_weights()
        inc_block, inc_var, cols = [], [], []
        for bi, b in enumerate(cliques.blocks):
            for m in b:
                others = [v for v in b if v != m]
                inc_block.append(bi)
                inc_var.append(m)
                cols.append(np.prod(x[:, others], axis=1) if others else np.ones(len(x)))
        self.inc_block = np.array(inc_block, dtype=np.int64)
        self.inc_var = np.array(inc_var, dtype=np.int64)
        self.others = np.column_stack(cols)  # product of a block's other members
        k = len(inc_block)
        self.scatter = sparse.csr_matrix(
            (np.ones(k), (np.arange(k), self.inc_var)), shape=(k, data.num_vars)
        )
        self.num_blocks = cliques.num_blocks

    def __call__(self, weights):
        weights = np.asarray(weights, dtype=float)
        contrib = self.others * weights[self.inc_block]
        delta = np.asarray(self.scatter.T @ contrib.T).T
        value = float(self.w @ np.sum(self.x * delta - np.logaddexp(0.0, delta), axis=1))
        resid = self.x - expit(delta)
        per_inc = self.w @ (resid[:, self.inc_var] * self.others)
        grad = np.bincount(self.inc_block, weights=per_inc, minlength=self.num_blocks)
        return value, grad


def pl_objective_grad(model: LogLinearModel, data: Dataset):
    """Value and gradient of the scaled pseudo-log-likelihood.

    The gradient per block is the flip-weighted contrast
    ``sum p(flipped bit | rest) * (phi_b(x) - phi_b(x flipped))``, which reduces
    to ``(x_m - p(x_m = 1 | rest)) * prod(other members of b)`` for each member m.
    """
    return PLObjective(model.cliques, data)(model.weights)


def _finish(blocks, opt, started, label, tol):
    if not opt.converged:
        log.warning("%s did not converge: %s (grad inf-norm %.3g > %.3g)",
                    label, opt.message, opt.grad_norm, tol)
    return EstimationResult(
        blocks=tuple(blocks), params=opt.x, converged=opt.converged,
        iterations=opt.iterations, final_grad_norm=opt.grad_norm,
        wall_time=time.perf_counter() - started, estimator=label,
    )


def fit_ml_stats(num_vars: int, cliques: CliqueSystem, stats: SufficientStats,
                 backend="auto", config: OptimizerConfig | None = None,
                 label: str = "ml") -> EstimationResult:
    """Exact ML from precomputed statistics, starting at the uniform model."""
    cfg = config or OptimizerConfig()
    started = time.perf_counter()
    objective = MLObjective(num_vars, cliques.blocks, stats, backend)
    opt = maximize(objective, np.zeros(cliques.num_blocks), cfg)
    return _finish(cliques.blocks, opt, started, label, cfg.tol_grad_inf)


def fit_ml(graph: Graph, cliques: CliqueSystem, data: Dataset, backend="auto",
           config: OptimizerConfig | None = None) -> EstimationResult:
    started = time.perf_counter()
    stats = sufficient_stats(cliques, data)
    result = fit_ml_stats(graph.num_vars, cliques, stats, backend, config)
    result.wall_time = time.perf_counter() - started
    return result


def fit_pl(graph: Graph, cliques: CliqueSystem, data: Dataset,
           config: OptimizerConfig | None = None) -> EstimationResult:
    cfg = config or OptimizerConfig()
    started = time.perf_counter()
    if data.num_vars != graph.num_vars:
        raise ValueError("dataset width does not match the graph")
    opt = maximize(PLObjective(cliques, data), np.zeros(cliques.num_blocks), cfg)
    return _finish(cliques.blocks, opt, started, "pl", cfg.tol_grad_inf)


def write_result(result: EstimationResult, graph: Graph, cliques: CliqueSystem, fh) -> None:
    """Model text format followed by a ``diag`` line."""
    write_model(LogLinearModel(graph, cliques, result.params), fh)
    fh.write(
        f"diag converged={int(result.converged)} iters={result.iterations} "
        f"gradnorm={result.final_grad_norm:.6g} seconds={result.wall_time:.6g}\n"
    )
