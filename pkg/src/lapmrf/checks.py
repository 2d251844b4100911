"""Invariant and acceptance checks, shared by the ``check`` command and the test suite.

Every check compares an implementation against an independent route:
finite differences, full enumeration, inclusion-exclusion on the exact joint
table, or closed forms.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import networkx as nx
import numpy as np

from .estimation import MLObjective, PLObjective, fit_ml, fit_ml_stats, sufficient_stats
from .graph import CliqueSystem, Graph, build_model, one_neighborhood
from .harness import ExperimentConfig, aggregate, mean_err, run_experiment
from .inference import (BruteForce, VariableElimination, joint_table, marginalize,
                        mobius_potentials)
from .lap import build_auxiliary, fit_lap
from .model import LogLinearModel, random_model
from .optimize import OptimizerConfig
from .sampling import Dataset, SamplerConfig, gibbs_sample

TIGHT = OptimizerConfig(tol_grad_inf=1e-10)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.detail} [{self.seconds:.1f}s]"


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    started = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - started)


def random_graph_with_cliques(rng, num_vars: int, p: float = 0.45) -> tuple[Graph, CliqueSystem]:
    """Connected Erdos-Renyi graph whose maximal cliques may exceed edges."""
    seed = int(rng.integers(2 ** 31))
    for attempt in range(100):
        g = nx.gnp_random_graph(num_vars, p, seed=seed + attempt)
        if nx.is_connected(g):
            break
    graph = Graph.from_edges(num_vars, g.edges())
    return graph, CliqueSystem.from_graph(graph)


def random_structure(rng, max_vars: int, include_general: bool = True):
    """A random small structure: chain, 2-D grid, one Chimera cell, or a general graph."""
    kinds = ["chain", "grid2d", "chimera"] + (["general"] if include_general else [])
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "chain":
        return build_model("chain", (int(rng.integers(2, max_vars + 1)),))
    if kind == "grid2d":
        shapes = [(r, c) for r in range(2, 5) for c in range(r, 6) if r * c <= max_vars]
        return build_model("grid2d", shapes[int(rng.integers(len(shapes)))])
    if kind == "chimera":
        cells = [l for l in range(1, 5) if 2 * l <= max_vars]  # noqa: E741
        return build_model("chimera", (1, 1, cells[int(rng.integers(len(cells)))]))
    return random_graph_with_cliques(rng, int(rng.integers(3, min(max_vars, 8) + 1)))


def random_dataset(rng, num_vars: int, n: int = 200) -> Dataset:
    return Dataset(rng.integers(0, 2, size=(n, num_vars)))


def _fd_grad(fun, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e)[0] - fun(x - e)[0]) / (2 * h)
    return g


def check_gradients(models: int = 50, max_vars: int = 12, seed: int = 1) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(models):
            graph, cliques = random_structure(rng, max_vars)
            theta = rng.uniform(-1, 1, cliques.num_blocks)
            data = random_dataset(rng, graph.num_vars)
            for obj in (MLObjective(graph.num_vars, cliques.blocks,
                                    sufficient_stats(cliques, data), "brute"),
                        PLObjective(cliques, data)):
                g = obj(theta)[1]
                fd = _fd_grad(obj, theta)
                worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))
        return worst <= 1e-6, f"{models} models, worst relative gradient error {worst:.2e} (tol 1e-6)"
    return _timed("C1 gradient correctness (ML and PL vs central differences)", run)


def check_inference(models: int = 50, max_vars: int = 16, seed: int = 2) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_z = worst_m = 0.0
        for i in range(models):
            if i % 5 == 4:
                graph, cliques = build_model("chimera", (1, 1, 3))
            else:
                graph, cliques = random_structure(rng, max_vars, include_general=False)
            model = random_model(graph, cliques, rng)
            a = BruteForce(graph.num_vars, cliques.blocks).run(model.weights)
            b = VariableElimination(graph.num_vars, cliques.blocks).run(model.weights)
            worst_z = max(worst_z, abs(a.log_z - b.log_z))
            worst_m = max(worst_m, float(np.max(np.abs(a.feature_means - b.feature_means))))
        ok = worst_z <= 1e-10 and worst_m <= 1e-10
        return ok, (f"{models} models, max |dlogZ| {worst_z:.1e}, "
                    f"max |dmean| {worst_m:.1e} (tol 1e-10)")
    return _timed("C2 brute force vs variable elimination", run)


def check_mobius(models: int = 50, max_vars: int = 8, seed: int = 3) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_block = worst_other = 0.0
        for _ in range(models):
            graph, cliques = random_structure(rng, max_vars)
            model = random_model(graph, cliques, rng)
            pots = mobius_potentials(joint_table(model))
            params = model.params
            for subset, w in pots.items():
                if subset in params:
                    worst_block = max(worst_block, abs(w - params[subset]))
                else:
                    worst_other = max(worst_other, abs(w))
        ok = worst_block <= 1e-10 and worst_other <= 1e-10
        return ok, (f"{models} models, block error {worst_block:.1e}, "
                    f"non-block magnitude {worst_other:.1e} (tol 1e-10)")
    return _timed("C3 normalized potentials recover block weights", run)


def check_lap_argument(models: int = 30, max_vars: int = 12, seed: int = 4) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, count = 0.0, 0
        for _ in range(models):
            graph, cliques = random_structure(rng, max_vars)
            model = random_model(graph, cliques, rng)
            table = joint_table(model)
            params = model.params
            for q in cliques.maximal:
                hood = one_neighborhood(graph, cliques, q)
                pots = mobius_potentials(marginalize(table, hood))
                for b in params:
                    if set(b) <= set(q):
                        worst = max(worst, abs(pots[b] - params[b]))
                        count += 1
        return worst <= 1e-8, f"{count} in-clique blocks, worst mismatch {worst:.1e} (tol 1e-8)"
    return _timed("C4 marginal over 1-neighborhood keeps in-clique weights", run)


def check_commutation(models: int = 20, max_vars: int = 8, seed: int = 5) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(models):
            graph, cliques = random_structure(rng, max_vars)
            truth = random_model(graph, cliques, rng)
            table = joint_table(truth)
            population = Dataset.from_table(table)
            joint_fit = fit_ml(graph, cliques, population, "brute", TIGHT)
            fitted = joint_table(LogLinearModel(graph, cliques, joint_fit.params))
            for q in cliques.maximal:
                aux = build_auxiliary(graph, cliques, q, "exact")
                stats = sufficient_stats(aux.local_cliques, population.columns(aux.variables))
                local = fit_ml_stats(len(aux.variables), aux.local_cliques, stats, "brute", TIGHT)
                local_model = LogLinearModel(aux.local_graph, aux.local_cliques, local.params)
                lhs = marginalize(fitted, aux.variables).probs
                rhs = joint_table(local_model).probs
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst <= 1e-6, f"{models} models, max entrywise gap {worst:.1e} (tol 1e-6)"
    return _timed("C5 ML then marginalize equals marginal-family ML", run)


def check_consistency_population(models: int = 20, max_vars: int = 10, seed: int = 6) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(models):
            graph, cliques = random_structure(rng, max_vars)
            truth = random_model(graph, cliques, rng)
            population = Dataset.from_table(joint_table(truth))
            est = fit_lap(graph, cliques, population, "exact", "brute", TIGHT)
            worst = max(worst, float(np.max(np.abs(est.params - truth.weights))))
        return worst <= 1e-6, f"{models} models, max |theta_LAP - theta| {worst:.1e} (tol 1e-6)"
    return _timed("C6a LAP_E recovers parameters from population statistics", run)


def check_consistency_sampled(runs: int = 10, seed: int = 7) -> CheckResult:
    def run():
        cfg = ExperimentConfig(model="grid2d", dims=(3, 3), sample_sizes=(100, 1000, 10000),
                               runs=runs, seed=seed, estimators=("ml", "lap_e"))
        summary = aggregate(run_experiment(cfg))
        errs = [mean_err(summary, "LAP_E", n) for n in cfg.sample_sizes]
        ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.15
        return ok, ("LAP_E mean err at N=100/1000/10000: "
                    + ", ".join(f"{e:.4f}" for e in errs) + " (decreasing, last < 0.15)")
    return _timed("C6b LAP_E error shrinks with N on a 3x3 grid", run)


def grid4_summary(runs: int = 10, seed: int = 8):
    cfg = ExperimentConfig(model="grid2d", dims=(4, 4), sample_sizes=(100, 1000, 10000),
                           runs=runs, seed=seed)
    return aggregate(run_experiment(cfg))


def check_lap_vs_pl(runs: int = 10, seed: int = 8, summary=None) -> CheckResult:
    def run():
        nonlocal summary
        if summary is None:
            summary = grid4_summary(runs, seed)
        parts, ok = [], True
        for n in (1000, 10000):
            pl = mean_err(summary, "PL", n)
            for est in ("LAP_E", "LAP_D", "LAP_P"):
                ratio = mean_err(summary, est, n) / pl
                ok &= 0.5 <= ratio <= 2.0
                parts.append(f"{est}/PL@{n}={ratio:.2f}")
        return ok, ", ".join(parts) + " (each within [0.5, 2])"
    return _timed("C7 LAP variants within a factor 2 of PL on a 4x4 grid", run)


def check_boundary_equalities(seed: int = 9, n: int = 2000) -> CheckResult:
    def run():
        worst = 0.0
        for kind, dims in (("chain", (4,)), ("chain", (2,))):
            graph, cliques = build_model(kind, dims)
            truth = random_model(graph, cliques, np.random.default_rng(seed))
            data = gibbs_sample(truth, n, SamplerConfig(seed=seed))
            ml = fit_ml(graph, cliques, data, "brute", TIGHT)
            lap = fit_lap(graph, cliques, data, "exact", "brute", TIGHT)
            worst = max(worst, float(np.max(np.abs(ml.params - lap.params))))
        return worst <= 1e-6, f"chain(4) and single edge, max |LAP_E - ML| {worst:.1e} (tol 1e-6)"
    return _timed("C8 LAP_E equals ML on chain(4) and a single edge", run)


def check_parallel_determinism(seed: int = 10, n: int = 2000) -> CheckResult:
    def run():
        graph, cliques = build_model("grid2d", (4, 4))
        truth = random_model(graph, cliques, np.random.default_rng(seed))
        data = gibbs_sample(truth, n, SamplerConfig(seed=seed))
        fits = [fit_lap(graph, cliques, data, "exact", workers=w).params for w in (1, 2, 8)]
        ok = all(np.array_equal(fits[0], f) for f in fits[1:])
        return ok, "workers 1, 2, 8 give " + ("identical" if ok else "DIFFERENT") + " estimates"
    return _timed("C9 LAP parallel determinism", run)


def check_scale(seed: int = 11, n: int = 10000, workers: int = 1) -> CheckResult:
    def run():
        started = time.perf_counter()
        graph, cliques = build_model("grid2d", (10, 10))
        truth = random_model(graph, cliques, np.random.default_rng(seed))
        data = gibbs_sample(truth, n, SamplerConfig(seed=seed))
        largest = max(len(one_neighborhood(graph, cliques, q)) for q in cliques.maximal)
        est = fit_lap(graph, cliques, data, "pairwise", workers=workers)
        elapsed = time.perf_counter() - started
        ok = elapsed < 300 and largest <= 10 and est.converged
        return ok, (f"10x10 grid, N={n}: {elapsed:.1f}s end to end (limit 300s), "
                    f"largest auxiliary {largest} vars (limit 10), converged={est.converged}")
    return _timed("C10 LAP_P scale smoke test", run)


QUICK = (
    lambda: check_gradients(models=10),
    lambda: check_inference(models=10),
    lambda: check_mobius(models=10),
    lambda: check_lap_argument(models=5),
    lambda: check_commutation(models=3),
    lambda: check_consistency_population(models=3),
    check_boundary_equalities,
    check_parallel_determinism,
)

FULL = (
    check_gradients, check_inference, check_mobius, check_lap_argument,
    check_commutation, check_consistency_population, check_consistency_sampled,
    check_lap_vs_pl, check_boundary_equalities, check_parallel_determinism, check_scale,
)


def run_checks(full: bool = False, echo=print) -> list[CheckResult]:
    results = []
    for check in FULL if full else QUICK:
        res = check()
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
