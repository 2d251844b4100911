"""Log-linear models over binary variables and their text serialization.

Each block ``b`` carries one weight with feature ``prod(x[i] for i in b)``,
which vanishes whenever any member is zero. The energy of a configuration is
``-sum_b w_b * phi_b(x)``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import DimensionError, InvalidCliqueError
from .graph import CliqueSystem, Graph


@dataclass(frozen=True)
class LogLinearModel:
    graph: Graph
    cliques: CliqueSystem
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.cliques.num_blocks,):
            raise DimensionError(
                f"expected {self.cliques.num_blocks} weights, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("model weights must be finite")
        for c in self.cliques.maximal:
            if max(c) >= self.graph.num_vars:
                raise InvalidCliqueError(f"clique {c} outside the graph")
            if not self.graph.is_complete(c):
                raise InvalidCliqueError(f"clique {c} is not complete in the graph")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def num_vars(self) -> int:
        return self.graph.num_vars

    @property
    def params(self) -> dict:
        return dict(zip(self.cliques.blocks, self.weights.tolist()))

    def weight(self, block: Iterable[int]) -> float:
        return float(self.weights[self.cliques.index(tuple(block))])

    def with_weights(self, weights) -> "LogLinearModel":
        return LogLinearModel(self.graph, self.cliques, weights)

    @classmethod
    def from_params(cls, graph: Graph, cliques: CliqueSystem, params: dict):
        """Model from a block -> weight mapping; missing blocks get weight 0."""
        w = np.zeros(cliques.num_blocks)
        for b, val in params.items():
            w[cliques.index(tuple(b))] = val
        return cls(graph, cliques, w)


def random_model(graph: Graph, cliques: CliqueSystem, rng: np.random.Generator,
                 low: float = -1.0, high: float = 1.0) -> LogLinearModel:
    return LogLinearModel(graph, cliques, rng.uniform(low, high, cliques.num_blocks))


def features(cliques: CliqueSystem, x) -> np.ndarray:
    """Block features for one configuration, or a matrix for a batch of rows."""
    x = np.asarray(x)
    out = np.empty(x.shape[:-1] + (cliques.num_blocks,))
    for i, b in enumerate(cliques.blocks):
        out[..., i] = np.all(x[..., list(b)] == 1, axis=-1)
    return out


def energy(model: LogLinearModel, x) -> float:
    x = np.asarray(x)
    if x.shape != (model.num_vars,):
        raise DimensionError(
            f"configuration has length {x.shape}, model has {model.num_vars} variables"
        )
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("configurations must be binary")
    return -float(features(model.cliques, x) @ model.weights)


def write_model(model: LogLinearModel, fh: TextIO) -> None:
    """Line format: ``mrf n``, then ``clique ...`` and ``param ... weight`` lines."""
    fh.write(f"mrf {model.num_vars}\n")
    for c in model.cliques.maximal:
        fh.write("clique " + " ".join(map(str, c)) + "\n")
    for b, w in zip(model.cliques.blocks, model.weights):
        fh.write("param " + " ".join(map(str, b)) + f" {float(w):.17g}\n")


def dumps_model(model: LogLinearModel) -> str:
    buf = io.StringIO()
    write_model(model, buf)
    return buf.getvalue()


def read_model(fh: TextIO) -> tuple[LogLinearModel, dict]:
    """Parse the line format; returns the model and any ``diag`` key/values."""
    num_vars = None
    cliques, params, diag = [], {}, {}
    for lineno, raw in enumerate(fh, 1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag, rest = parts[0], parts[1:]
        if tag == "mrf":
            num_vars = int(rest[0])
        elif tag == "clique":
            cliques.append(tuple(int(v) for v in rest))
        elif tag == "param":
            params[tuple(int(v) for v in rest[:-1])] = float(rest[-1])
        elif tag == "diag":
            for item in rest:
                key, _, val = item.partition("=")
                diag[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown record {tag!r}")
    if num_vars is None:
        raise ValueError("missing 'mrf <num_vars>' header")
    edges = {(u, v) for c in cliques for u in c for v in c if u < v}
    graph = Graph.from_edges(num_vars, edges)
    system = CliqueSystem.from_cliques(cliques, graph)
    unknown = set(params) - set(system.blocks)
    if unknown:
        raise ValueError(f"params for blocks outside the clique system: {sorted(unknown)}")
    return LogLinearModel.from_params(graph, system, params), diag


def loads_model(text: str) -> tuple[LogLinearModel, dict]:
    return read_model(io.StringIO(text))
