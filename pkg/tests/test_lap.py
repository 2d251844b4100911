from itertools import combinations

import numpy as np
import pytest

import lapmrf.lap as lap_module
from lapmrf.errors import InvalidCliqueError, SubproblemError
from lapmrf.estimation import SufficientStats, fit_ml
from lapmrf.graph import Graph, CliqueSystem, build_model, subsets
from lapmrf.inference import joint_table
from lapmrf.lap import build_auxiliary, fit_lap
from lapmrf.model import random_model
from lapmrf.optimize import OptimizerConfig
from lapmrf.sampling import Dataset, SamplerConfig, gibbs_sample

TIGHT = OptimizerConfig(tol_grad_inf=1e-10)
BOUNDARY = (1, 2, 4, 7, 9, 10)


def sampled(kind, dims, seed, n=2000):
    graph, cliques = build_model(kind, dims)
    truth = random_model(graph, cliques, np.random.default_rng(seed))
    return graph, cliques, truth, gibbs_sample(truth, n, SamplerConfig(seed=seed))


class TestAuxiliary:
    @pytest.mark.parametrize("strategy", ["exact", "dense", "pairwise"])
    def test_chain_inner_edge(self, strategy):
        graph, cliques = build_model("chain", (4,))
        aux = build_auxiliary(graph, cliques, (1, 2), strategy)
        assert aux.variables == (0, 1, 2, 3)
        if strategy == "exact":
            assert aux.local_cliques.maximal == cliques.maximal
            assert aux.local_cliques.blocks == cliques.blocks
            assert aux.block_map == {b: b for b in cliques.blocks}

    def _extra(self, aux, cliques):
        original = {aux.to_global(b) for b in aux.local_cliques.blocks
                    if aux.to_global(b) in cliques}
        return {aux.to_global(b) for b in aux.local_cliques.blocks} - original

    def test_grid_dense(self):
        graph, cliques = build_model("grid2d", (4, 4))
        aux = build_auxiliary(graph, cliques, (5, 6), "dense")
        assert aux.boundary == BOUNDARY
        all_subsets = set(subsets(BOUNDARY))
        assert len(all_subsets) == 63
        generated = {aux.to_global(b) for b in aux.local_cliques.blocks}
        assert all_subsets <= generated
        # boundary singletons and the edges {1,2}, {9,10} are original blocks
        assert self._extra(aux, cliques) == all_subsets - set(cliques.blocks)
        assert len(all_subsets - set(cliques.blocks)) == 63 - 6 - 2

    def test_grid_pairwise(self):
        graph, cliques = build_model("grid2d", (4, 4))
        aux = build_auxiliary(graph, cliques, (5, 6), "pairwise")
        generated = {aux.to_global(b) for b in aux.local_cliques.blocks}
        boundary_blocks = {b for b in generated if set(b) <= set(BOUNDARY)}
        assert boundary_blocks == {(v,) for v in BOUNDARY} | set(combinations(BOUNDARY, 2))
        assert len(boundary_blocks) == 6 + 15
        assert max(len(b) for b in generated) == 2

    def test_grid_exact(self):
        graph, cliques = build_model("grid2d", (4, 4))
        aux = build_auxiliary(graph, cliques, (5, 6), "exact")
        generated = {aux.to_global(b) for b in aux.local_cliques.blocks}
        assert (4, 7, 9, 10) in generated
        assert (1, 4) in generated and (2, 7) in generated
        assert (1, 10) not in generated

    def test_block_map_covers_original_blocks(self):
        graph, cliques = build_model("grid2d", (4, 4))
        aux = build_auxiliary(graph, cliques, (5, 6), "exact")
        inside = set(aux.variables)
        expected = {b for b in cliques.blocks if set(b) <= inside}
        assert set(aux.block_map.values()) == expected
        for local, glob in aux.block_map.items():
            assert aux.to_global(local) == glob

    def test_invalid_clique(self):
        graph, cliques = build_model("chain", (3,))
        with pytest.raises(InvalidCliqueError):
            build_auxiliary(graph, cliques, (0, 2))

    def test_unknown_strategy(self):
        graph, cliques = build_model("grid2d", (3, 3))
        with pytest.raises(ValueError):
            build_auxiliary(graph, cliques, (0, 1), "sparse")


class TestFitLap:
    @pytest.mark.parametrize("kind,dims,strategies", [
        ("chain", (4,), ("exact",)),
        ("chain", (2,), ("exact", "dense", "pairwise")),
    ])
    def test_equals_ml(self, kind, dims, strategies):
        graph, cliques, _, data = sampled(kind, dims, 3)
        ml = fit_ml(graph, cliques, data, "brute", TIGHT)
        for strategy in strategies:
            est = fit_lap(graph, cliques, data, strategy, "brute", TIGHT)
            assert np.max(np.abs(est.params - ml.params)) <= 1e-6, strategy

    def test_population_consistency(self):
        rng = np.random.default_rng(44)
        graph = Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)])
        cliques = CliqueSystem.from_graph(graph)
        truth = random_model(graph, cliques, rng)
        population = Dataset.from_table(joint_table(truth))
        est = fit_lap(graph, cliques, population, "exact", "brute", TIGHT)
        assert np.max(np.abs(est.params - truth.weights)) <= 1e-6

    def test_average_merge(self):
        graph, cliques, _, data = sampled("grid2d", (3, 3), 5)
        owner = fit_lap(graph, cliques, data, "exact", merge="owner")
        avg = fit_lap(graph, cliques, data, "exact", merge="average")
        edges = [i for i, b in enumerate(cliques.blocks) if len(b) == 2]
        # each edge lies in only its own maximal clique, so both rules agree there
        np.testing.assert_array_equal(owner.params[edges], avg.params[edges])
        assert not np.array_equal(owner.params, avg.params)
        # a corner singleton is averaged over its two incident edges' sub-problems
        per_q = {r.q: r for r in avg.subproblems}
        vals = []
        for q in [(0, 1), (0, 3)]:
            aux = build_auxiliary(graph, cliques, q)
            local = aux.variables.index(0)
            vals.append(per_q[q].weights[aux.local_cliques.index((local,))])
        assert avg.params[cliques.index((0,))] == pytest.approx(np.mean(vals), abs=1e-15)

    def test_deterministic_across_workers(self):
        graph, cliques, _, data = sampled("grid2d", (3, 3), 6)
        fits = [fit_lap(graph, cliques, data, "dense", workers=w).params for w in (1, 2, 3)]
        assert all(np.array_equal(fits[0], f) for f in fits[1:])

    def test_subproblems_receive_only_statistics(self, monkeypatch):
        seen = []
        original = lap_module.solve_subproblem

        def spy(aux, stats, *rest):
            seen.append(type(stats))
            return original(aux, stats, *rest)

        monkeypatch.setattr(lap_module, "solve_subproblem", spy)
        graph, cliques, _, data = sampled("grid2d", (3, 3), 7, n=500)
        fit_lap(graph, cliques, data, "pairwise")
        assert len(seen) == len(cliques.maximal)
        assert set(seen) == {SufficientStats}

    def test_one_statistics_pass_per_subproblem(self, monkeypatch):
        calls = []
        original = lap_module.sufficient_stats

        def counting(cliques, data, scope=None):
            calls.append(data.num_vars)
            return original(cliques, data, scope)

        monkeypatch.setattr(lap_module, "sufficient_stats", counting)
        graph, cliques, _, data = sampled("grid2d", (3, 3), 8, n=500)
        fit_lap(graph, cliques, data, "exact")
        assert len(calls) == len(cliques.maximal)

    def test_rbm_neighborhood_too_large(self):
        graph, cliques = build_model("rbm", (16, 16))
        data = Dataset(np.zeros((10, 32), dtype=int))
        with pytest.raises(SubproblemError) as info:
            fit_lap(graph, cliques, data, "pairwise")
        assert info.value.clique == cliques.maximal[0]
        assert "too large" in str(info.value)

    def test_converges_and_close_to_ml(self):
        graph, cliques, _, data = sampled("grid2d", (3, 3), 9, n=5000)
        ml = fit_ml(graph, cliques, data)
        for strategy in ("exact", "dense", "pairwise"):
            est = fit_lap(graph, cliques, data, strategy)
            assert est.converged
            assert np.linalg.norm(est.params - ml.params) / np.linalg.norm(ml.params) < 0.2

    def test_bad_merge(self):
        graph, cliques, _, data = sampled("chain", (3,), 1, n=50)
        with pytest.raises(ValueError):
            fit_lap(graph, cliques, data, merge="median")
