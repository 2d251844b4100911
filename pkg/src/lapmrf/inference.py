"""Exact inference for binary log-linear models.

Two backends compute the log-partition function and every block's feature
expectation: :class:`BruteForce` enumerates all configurations and
:class:`VariableElimination` runs a forward/backward sweep over elimination
buckets in log space. Joint tables are indexed big-endian: the first listed
variable is the most significant bit, so ``probs.reshape((2,) * k)`` has one
axis per variable in ascending order.

The module also holds the normalized-potential (Mobius) oracle used to check
that weights match between a joint model and its marginals.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import PositivityError, TooLargeError, WidthExceededError
from .graph import CliqueSystem, Graph, one_neighborhood
from .model import LogLinearModel

BRUTE_FORCE_CAP = 25
VE_TABLE_CAP = 2 ** 26
# ``auto`` enumerates up to this many variables, eliminates above it
AUTO_BRUTE_MAX = 16
_CACHE_ENTRIES = 2 ** 23
_CHUNK = 2 ** 18


@dataclass(frozen=True)
class InferenceResult:
    log_z: float
    feature_means: np.ndarray
    blocks: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.blocks, self.feature_means.tolist()))


@dataclass(frozen=True)
class JointTable:
    """Normalized table over ``variables`` (ascending), big-endian indexed."""

    variables: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        if p.size != 2 ** len(self.variables):
            raise ValueError(
                f"table of size {p.size} does not match {len(self.variables)} variables"
            )
        if tuple(sorted(self.variables)) != tuple(self.variables):
            raise ValueError("table variables must be ascending")
        object.__setattr__(self, "probs", p)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape((2,) * len(self.variables))


def _bit_masks(num_vars: int, blocks: Sequence[tuple], positions=None) -> np.ndarray:
    pos = positions if positions is not None else {v: v for v in range(num_vars)}
    masks = np.zeros(len(blocks), dtype=np.int64)
    for i, b in enumerate(blocks):
        for v in b:
            masks[i] |= 1 << (num_vars - 1 - pos[v])
    return masks


def _feature_matrix(masks: np.ndarray, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    return ((idx & masks[None, :]) == masks[None, :]).astype(float)


class BruteForce:
    """Enumerates all ``2**num_vars`` configurations of a fixed block structure."""

    def __init__(self, num_vars: int, blocks: Sequence[tuple], cap: int = BRUTE_FORCE_CAP):
        if num_vars > cap:
            raise TooLargeError(
                f"brute force over {num_vars} variables exceeds cap of {cap}; "
                "use variable elimination"
            )
        self.num_vars = num_vars
        self.blocks = tuple(blocks)
        self.masks = _bit_masks(num_vars, self.blocks)
        size = 2 ** num_vars
        self._features = None
        if size * max(len(self.blocks), 1) <= _CACHE_ENTRIES:
            self._features = _feature_matrix(self.masks, 0, size)

    def _chunks(self):
        size = 2 ** self.num_vars
        if self._features is not None:
            yield self._features
            return
        for start in range(0, size, _CHUNK):
            yield _feature_matrix(self.masks, start, min(size, start + _CHUNK))

    def log_unnormalized(self, weights) -> np.ndarray:
        weights = np.asarray(weights, dtype=float)
        return np.concatenate([f @ weights for f in self._chunks()])

    def run(self, weights) -> InferenceResult:
        weights = np.asarray(weights, dtype=float)
        scores = self.log_unnormalized(weights)
        log_z = float(logsumexp(scores))
        probs = np.exp(scores - log_z)
        means = np.zeros(len(self.blocks))
        start = 0
        for f in self._chunks():
            means += probs[start:start + f.shape[0]] @ f
            start += f.shape[0]
        return InferenceResult(log_z, np.clip(means, 0.0, 1.0), self.blocks)


def min_fill_order(num_vars: int, scopes: Iterable[Iterable[int]]) -> list[int]:
    """Greedy min-fill elimination order; ties go to the lowest variable index."""
    adj = [set() for _ in range(num_vars)]
    for s in scopes:
        for u, v in combinations(sorted(set(s)), 2):
            adj[u].add(v)
            adj[v].add(u)
    remaining = set(range(num_vars))
    order = []
    while remaining:
        best, best_fill = None, None
        for v in sorted(remaining):
            nb = sorted(adj[v])
            fill = sum(1 for a, b in combinations(nb, 2) if b not in adj[a])
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
                if fill == 0:
                    break
        nb = adj[best]
        for a, b in combinations(sorted(nb), 2):
            adj[a].add(b)
            adj[b].add(a)
        for a in nb:
            adj[a].discard(best)
        remaining.remove(best)
        order.append(best)
    return order


def _group_blocks(blocks: Sequence[tuple]) -> list[tuple[tuple, list[int]]]:
    """Group block indices under the lexicographically first maximal block containing them."""
    sets = [frozenset(b) for b in blocks]
    tops = sorted({b for b, s in zip(blocks, sets) if not any(s < t for t in sets)})
    groups = {t: [] for t in tops}
    for i, b in enumerate(blocks):
        s = frozenset(b)
        for t in tops:
            if s <= frozenset(t):
                groups[t].append(i)
                break
    return list(groups.items())


def _expand(table: np.ndarray, scope: tuple, target: tuple) -> np.ndarray:
    # scopes are sorted subsets of the sorted target, so a reshape suffices
    present = set(scope)
    return table.reshape([2 if v in present else 1 for v in target])


class VariableElimination:
    """Bucket elimination with a backward pass for exact block expectations.

    The elimination plan is fixed at construction, so repeated calls with new
    weights (as inside an optimizer) only redo the numeric sweeps.
    """

    def __init__(self, num_vars: int, blocks: Sequence[tuple], order=None,
                 cap: int = VE_TABLE_CAP):
        self.num_vars = num_vars
        self.blocks = tuple(blocks)
        self.factors = []  # (scope, block indices, feature matrix)
        for scope, idx in _group_blocks(self.blocks):
            pos = {v: i for i, v in enumerate(scope)}
            masks = _bit_masks(len(scope), [self.blocks[i] for i in idx], pos)
            self.factors.append((scope, np.array(idx), _feature_matrix(masks, 0, 2 ** len(scope))))
        if order is None:
            order = min_fill_order(num_vars, [f[0] for f in self.factors])
        order = [int(v) for v in order]
        if sorted(order) != list(range(num_vars)):
            raise ValueError("elimination order must be a permutation of all variables")
        self.order = order

        # symbolic pass; ids < len(factors) are original factors, others messages
        scopes = [f[0] for f in self.factors]
        active = list(range(len(scopes)))
        self.steps = []  # (var, bucket scope, member ids, message id)
        self.consumer = {}
        for v in order:
            members = [fid for fid in active if v in scopes[fid]]
            bucket = tuple(sorted({u for fid in members for u in scopes[fid]} | {v}))
            if 2 ** len(bucket) > cap:
                raise WidthExceededError(bucket, cap)
            msg_id = len(scopes)
            scopes.append(tuple(u for u in bucket if u != v))
            for fid in members:
                self.consumer[fid] = len(self.steps)
            active = [fid for fid in active if fid not in members] + [msg_id]
            self.steps.append((v, bucket, members, msg_id))
        self.scopes = scopes
        self.parent = [self.consumer.get(step[3]) for step in self.steps]

    @property
    def max_bucket(self) -> int:
        return max(len(s[1]) for s in self.steps)

    def run(self, weights) -> InferenceResult:
        weights = np.asarray(weights, dtype=float)
        tables = {}
        for fid, (scope, idx, feats) in enumerate(self.factors):
            tables[fid] = (feats @ weights[idx]).reshape((2,) * len(scope))

        combined = []
        for v, bucket, members, msg_id in self.steps:
            acc = np.zeros((2,) * len(bucket))
            for fid in members:
                acc = acc + _expand(tables[fid], self.scopes[fid], bucket)
            combined.append(acc)
            tables[msg_id] = logsumexp(acc, axis=bucket.index(v))
        log_z = float(sum(tables[s[3]] for s, p in zip(self.steps, self.parent) if p is None))

        # downward messages, parents before children
        beliefs = [None] * len(self.steps)
        for k in range(len(self.steps) - 1, -1, -1):
            v, bucket, members, msg_id = self.steps[k]
            sep = self.scopes[msg_id]
            u = self.parent[k]
            if u is None:
                down = log_z - tables[msg_id]
            else:
                ubucket = self.steps[u][1]
                diff = beliefs[u] - _expand(tables[msg_id], sep, ubucket)
                axes = tuple(i for i, w in enumerate(ubucket) if w not in sep)
                down = logsumexp(diff, axis=axes) if axes else diff
            beliefs[k] = combined[k] + _expand(np.asarray(down), sep, bucket)

        means = np.zeros(len(self.blocks))
        for fid, (scope, idx, feats) in enumerate(self.factors):
            k = self.consumer[fid]
            bucket = self.steps[k][1]
            axes = tuple(i for i, w in enumerate(bucket) if w not in scope)
            logm = logsumexp(beliefs[k], axis=axes) if axes else beliefs[k]
            means[idx] = feats.T @ np.exp(logm.ravel() - log_z)
        return InferenceResult(log_z, np.clip(means, 0.0, 1.0), self.blocks)


def make_engine(num_vars: int, blocks: Sequence[tuple], backend: str = "auto",
                brute_cap: int = BRUTE_FORCE_CAP, ve_cap: int = VE_TABLE_CAP, order=None):
    """Inference engine for a fixed structure: ``brute``, ``ve`` or ``auto``."""
    if backend == "auto":
        backend = "brute" if num_vars <= min(AUTO_BRUTE_MAX, brute_cap) else "ve"
    if backend == "brute":
        return BruteForce(num_vars, blocks, cap=brute_cap)
    if backend == "ve":
        return VariableElimination(num_vars, blocks, order=order, cap=ve_cap)
    raise ValueError(f"unknown backend {backend!r}")


def brute_force(model: LogLinearModel, cap: int = BRUTE_FORCE_CAP) -> InferenceResult:
    return BruteForce(model.num_vars, model.cliques.blocks, cap).run(model.weights)


def variable_elimination(model: LogLinearModel, order=None,
                         cap: int = VE_TABLE_CAP) -> InferenceResult:
    return VariableElimination(model.num_vars, model.cliques.blocks, order, cap).run(
        model.weights
    )


def joint_table(model: LogLinearModel, cap: int = BRUTE_FORCE_CAP) -> JointTable:
    engine = BruteForce(model.num_vars, model.cliques.blocks, cap)
    scores = engine.log_unnormalized(model.weights)
    probs = np.exp(scores - logsumexp(scores))
    return JointTable(tuple(range(model.num_vars)), probs)


def configurations(num_vars: int) -> np.ndarray:
    """All binary configurations as rows, in joint-table index order."""
    idx = np.arange(2 ** num_vars, dtype=np.int64)[:, None]
    shifts = np.arange(num_vars - 1, -1, -1, dtype=np.int64)[None, :]
    return ((idx >> shifts) & 1).astype(np.uint8)


def marginalize(table: JointTable, keep: Iterable[int]) -> JointTable:
    keep = tuple(sorted(set(keep)))
    if not set(keep) <= set(table.variables):
        raise ValueError("keep must be a subset of the table's variables")
    axes = tuple(i for i, v in enumerate(table.variables) if v not in keep)
    t = table.tensor.sum(axis=axes) if axes else table.tensor
    return JointTable(keep, np.asarray(t).ravel())


def _mobius(log_tensor: np.ndarray) -> np.ndarray:
    out = np.array(log_tensor, dtype=float)
    for axis in range(out.ndim):
        hi = [slice(None)] * out.ndim
        lo = [slice(None)] * out.ndim
        hi[axis], lo[axis] = 1, 0
        out[tuple(hi)] -= out[tuple(lo)]
    return out


def mobius_potentials(table: JointTable) -> dict:
    """Unique zero-normalized weights of a positive table, keyed by variable subsets.

    ``weight(b) = sum over a subset of b of (-1)**|b - a| * log p(ones on a)``,
    evaluated for every non-empty subset by an in-place inclusion-exclusion
    sweep over the axes.
    """
    if not np.all(table.probs > 0):
        raise PositivityError("normalized potentials need a strictly positive table")
    k = len(table.variables)
    coeffs = _mobius(np.log(table.tensor)).ravel()
    out = {}
    for idx in range(1, 2 ** k):
        members = tuple(table.variables[i] for i in range(k) if idx >> (k - 1 - i) & 1)
        out[members] = float(coeffs[idx])
    return dict(sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])))


def explicit_ml_estimate(table: JointTable, q: Sequence[int], cliques: CliqueSystem,
                         graph: Graph) -> JointTable:
    """Closed-form ML table ``p(x_A) p(x_{S-q}) / p(x_{A-q})`` for neighborhood ``A`` of ``q``."""
    if not np.all(table.probs > 0):
        raise PositivityError("explicit ML estimate needs a strictly positive table")
    q = tuple(q)
    hood = set(one_neighborhood(graph, cliques, q))
    rest = set(table.variables) - set(q)
    boundary = hood - set(q)
    svars = table.variables
    num = (
        _expand(marginalize(table, hood).tensor, tuple(sorted(hood)), svars)
        * _expand(marginalize(table, rest).tensor, tuple(sorted(rest)), svars)
    )
    den = _expand(marginalize(table, boundary).tensor, tuple(sorted(boundary)), svars)
    return JointTable(svars, (num / den).ravel())
