"""Systematic-scan Gibbs sampling and the binary dataset container.

Random numbers come from numpy's PCG64 generator, so a seed reproduces the
same dataset on any platform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numba
import numpy as np

from .errors import DimensionError, EmptyDatasetError
from .inference import JointTable, configurations
from .model import LogLinearModel


@dataclass(frozen=True)
class SamplerConfig:
    burn_in_sweeps: int = 1000
    thin_sweeps: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be non-negative")
        if self.thin_sweeps < 1:
            raise ValueError("thin_sweeps must be at least 1")


@dataclass(frozen=True)
class Dataset:
    """Binary samples, one row per observation.

    ``weights`` turns the rows into a weighted population (for instance every
    configuration weighted by its exact probability); ``None`` means uniform.
    """

    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.samples)
        if x.ndim != 2:
            raise DimensionError("samples must be a 2-D array")
        if not np.all((x == 0) | (x == 1)):
            raise ValueError("samples must be binary")
        x = x.astype(np.uint8)
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (x.shape[0],) or np.any(w < 0):
                raise ValueError("weights must be non-negative, one per sample")
            object.__setattr__(self, "weights", w / w.sum())

    @classmethod
    def from_table(cls, table: JointTable) -> "Dataset":
        """Every configuration, weighted by its probability in ``table``."""
        return cls(configurations(len(table.variables)), table.probs)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def num_vars(self) -> int:
        return self.samples.shape[1]

    def normalized_weights(self) -> np.ndarray:
        if len(self) == 0:
            raise EmptyDatasetError("dataset has no samples")
        if self.weights is None:
            return np.full(len(self), 1.0 / len(self))
        return self.weights

    def prefix(self, n: int) -> "Dataset":
        if self.weights is not None:
            raise ValueError("prefixes are only defined for unweighted samples")
        return Dataset(self.samples[:n])

    def columns(self, variables: Iterable[int]) -> "Dataset":
        return Dataset(self.samples[:, list(variables)], self.weights)


def write_csv(data: Dataset, fh: TextIO) -> None:
    """One row per sample, comma-separated bits, no header."""
    for row in data.samples:
        fh.write(",".join("1" if v else "0" for v in row) + "\n")


def read_csv(fh: TextIO) -> Dataset:
    rows = [[int(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    if not rows:
        raise EmptyDatasetError("no samples in CSV input")
    return Dataset(np.array(rows, dtype=np.uint8))


def _incidence(model: LogLinearModel):
    """CSR layout: for each variable, the blocks containing it and their other members."""
    n = model.num_vars
    per_var = [[] for _ in range(n)]
    for bi, b in enumerate(model.cliques.blocks):
        for m in b:
            per_var[m].append((bi, [v for v in b if v != m]))
    inc_ptr = np.zeros(n + 1, dtype=np.int64)
    inc_block, oth_ptr, oth = [], [0], []
    for m in range(n):
        for bi, others in per_var[m]:
            inc_block.append(bi)
            oth.extend(others)
            oth_ptr.append(len(oth))
        inc_ptr[m + 1] = len(inc_block)
    return (inc_ptr, np.array(inc_block, dtype=np.int64),
            np.array(oth_ptr, dtype=np.int64), np.array(oth, dtype=np.int64))


def full_conditional(model: LogLinearModel, x, m: int) -> float:
    """``p(x_m = 1 | rest)``; only blocks containing ``m`` contribute."""
    x = np.asarray(x)
    if x.shape != (model.num_vars,):
        raise DimensionError("configuration length does not match the model")
    if not 0 <= m < model.num_vars:
        raise IndexError(f"variable {m} out of range")
    delta = 0.0
    for b, w in zip(model.cliques.blocks, model.weights):
        if m in b and all(x[i] == 1 for i in b if i != m):
            delta += w
    return float(1.0 / (1.0 + np.exp(-delta)))


@numba.njit(cache=True)
def _run_sweeps(x, weights, inc_ptr, inc_block, oth_ptr, oth, uniforms,
                first_sweep, burn, thin, out, n_out):
    n = x.shape[0]
    for s in range(uniforms.shape[0]):
        for m in range(n):
            delta = 0.0
            for k in range(inc_ptr[m], inc_ptr[m + 1]):
                on = True
                for j in range(oth_ptr[k], oth_ptr[k + 1]):
                    if x[oth[j]] == 0:
                        on = False
                        break
                if on:
                    delta += weights[inc_block[k]]
            if delta >= 0:
                p = 1.0 / (1.0 + np.exp(-delta))
            else:
                e = np.exp(delta)
                p = e / (1.0 + e)
            x[m] = 1 if uniforms[s, m] < p else 0
        done = first_sweep + s + 1
        if done > burn and (done - burn) % thin == 0:
            out[n_out] = x
            n_out += 1
    return n_out


def gibbs_sample(model: LogLinearModel, n: int, config: SamplerConfig | None = None,
                 chunk_sweeps: int = 4096) -> Dataset:
    """Draw ``n`` samples by systematic sweeps in index order from the all-zeros state."""
    if n < 1:
        raise ValueError("need at least one sample")
    cfg = config or SamplerConfig()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    structure = _incidence(model)
    weights = np.ascontiguousarray(model.weights, dtype=float)
    x = np.zeros(model.num_vars, dtype=np.uint8)
    out = np.zeros((n, model.num_vars), dtype=np.uint8)
    total = cfg.burn_in_sweeps + n * cfg.thin_sweeps
    done, kept = 0, 0
    while done < total:
        k = min(chunk_sweeps, total - done)
        uniforms = rng.random((k, model.num_vars))
        kept = _run_sweeps(x, weights, *structure, uniforms, done,
                           cfg.burn_in_sweeps, cfg.thin_sweeps, out, kept)
        done += k
    return Dataset(out)
