"""Experiment driver: random models, Gibbs data, all estimators, relative error to ML."""
from __future__ import annotations

import csv
import io
import time
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import MRFError, TooLargeError, WidthExceededError
from .estimation import EstimationResult, fit_ml, fit_pl
from .graph import build_model
from .inference import make_engine
from .lap import fit_lap
from .model import random_model
from .optimize import OptimizerConfig
from .sampling import SamplerConfig, gibbs_sample

ESTIMATORS = ("ml", "pl", "lap_e", "lap_d", "lap_p")
LABELS = {"ml": "ML", "pl": "PL", "lap_e": "LAP_E", "lap_d": "LAP_D", "lap_p": "LAP_P"}
_LAP_STRATEGY = {"lap_e": "exact", "lap_d": "dense", "lap_p": "pairwise"}
_ROLE_PARAMS, _ROLE_SAMPLER = 0, 1


class ExperimentError(MRFError):
    """The experiment cannot run as configured."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "grid2d"
    dims: tuple = (4, 4)
    sample_sizes: tuple = (100, 1000, 10000)
    runs: int = 10
    seed: int = 0
    estimators: tuple = ESTIMATORS
    merge: str = "owner"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    backend: str = "auto"
    workers: int = 1
    fixed_params: bool = False
    record_timing: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 1 for n in sizes) or list(sizes) != sorted(set(sizes)):
            raise ValueError("sample sizes must be positive and strictly ascending")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")
        object.__setattr__(self, "sample_sizes", sizes)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def label(self) -> str:
        return f"{self.model}-" + "x".join(map(str, self.dims))


@dataclass
class MetricsRow:
    estimator: str
    model: str
    n: int
    run: int
    err: float
    seconds: float
    params: np.ndarray
    truth: np.ndarray
    converged: bool = True


def relative_error(theta, theta_ml) -> float:
    """``||theta - theta_ml|| / ||theta_ml||``."""
    theta = np.asarray(theta, dtype=float)
    theta_ml = np.asarray(theta_ml, dtype=float)
    diff = float(np.linalg.norm(theta - theta_ml))
    scale = float(np.linalg.norm(theta_ml))
    if scale == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return diff / scale


def derive_seed(master: int, run: int, role: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=(int(run), int(role)))


def _fit(name, graph, cliques, data, cfg: ExperimentConfig) -> EstimationResult:
    if name == "ml":
        return fit_ml(graph, cliques, data, cfg.backend, cfg.optimizer)
    if name == "pl":
        return fit_pl(graph, cliques, data, cfg.optimizer)
    return fit_lap(graph, cliques, data, _LAP_STRATEGY[name], cfg.backend,
                   cfg.optimizer, cfg.merge, cfg.workers)


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[MetricsRow]:
    graph, cliques = build_model(cfg.model, cfg.dims)
    try:
        make_engine(graph.num_vars, cliques.blocks, cfg.backend)
    except (TooLargeError, WidthExceededError) as exc:
        raise ExperimentError(
            f"the ML baseline is intractable for {cfg.label} with backend "
            f"{cfg.backend!r}: {exc}"
        ) from exc
    rows = []
    for run in range(cfg.runs):
        param_run = 0 if cfg.fixed_params else run
        rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, param_run, _ROLE_PARAMS)))
        truth = random_model(graph, cliques, rng)
        sampler_seed = int(derive_seed(cfg.seed, run, _ROLE_SAMPLER).generate_state(1, np.uint64)[0])
        sampler = SamplerConfig(cfg.sampler.burn_in_sweeps, cfg.sampler.thin_sweeps, sampler_seed)
        stream = gibbs_sample(truth, max(cfg.sample_sizes), sampler)
        for n in cfg.sample_sizes:
            data = stream.prefix(n)
            ml = fit_ml(graph, cliques, data, cfg.backend, cfg.optimizer)
            for name in cfg.estimators:
                started = time.perf_counter()
                res = ml if name == "ml" else _fit(name, graph, cliques, data, cfg)
                seconds = res.wall_time if name == "ml" else time.perf_counter() - started
                rows.append(MetricsRow(
                    estimator=LABELS[name], model=cfg.label, n=n, run=run,
                    err=relative_error(res.params, ml.params),
                    seconds=seconds if cfg.record_timing else 0.0,
                    params=res.params, truth=truth.weights, converged=res.converged,
                ))
                if progress is not None:
                    progress(rows[-1])
    return sort_rows(rows)


def sort_rows(rows):
    order = {LABELS[k]: i for i, k in enumerate(ESTIMATORS)}
    return sorted(rows, key=lambda r: (order.get(r.estimator, len(order)), r.estimator, r.n, r.run))


@dataclass
class SummaryRow:
    estimator: str
    model: str
    n: int
    mean_err: float
    std_err: float
    mean_param_var: float
    runs: int


def aggregate(rows) -> list[SummaryRow]:
    """Mean and population standard deviation of err, and mean per-parameter variance.

    The variance is taken across runs for each parameter's estimate separately
    and then averaged over parameters.
    """
    groups = defaultdict(list)
    for r in sort_rows(rows):
        groups[(r.estimator, r.model, r.n)].append(r)
    out = []
    for (est, model, n), grp in groups.items():
        errs = np.array([r.err for r in grp])
        params = np.vstack([r.params for r in grp])
        out.append(SummaryRow(est, model, n, float(errs.mean()), float(errs.std()),
                              float(params.var(axis=0).mean()), len(grp)))
    return out


def write_rows(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["estimator", "model", "N", "run", "err", "seconds"])
    for r in rows:
        w.writerow([r.estimator, r.model, r.n, r.run, f"{r.err:.17g}", f"{r.seconds:.6f}"])


def write_summary(summary, fh) -> None:
    fh.write("# std_err is the population standard deviation over runs (divides by runs)\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["estimator", "model", "N", "mean_err", "std_err", "mean_param_var"])
    for s in summary:
        w.writerow([s.estimator, s.model, s.n, f"{s.mean_err:.17g}",
                    f"{s.std_err:.17g}", f"{s.mean_param_var:.17g}"])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def mean_err(summary, estimator: str, n: int) -> float:
    for s in summary:
        if s.estimator == estimator and s.n == n:
            return s.mean_err
    raise KeyError((estimator, n))
