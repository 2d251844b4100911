import io
import math

import numpy as np
import pytest

from lapmrf.graph import build_model
from lapmrf.inference import brute_force, joint_table
from lapmrf.model import LogLinearModel, random_model
from lapmrf.sampling import Dataset, SamplerConfig, full_conditional, gibbs_sample, read_csv, write_csv


def single_node(theta):
    graph, cliques = build_model("chain", (1,))
    return LogLinearModel(graph, cliques, [theta])


class TestFullConditional:
    def test_zero(self):
        assert full_conditional(single_node(0.0), [0], 0) == 0.5

    def test_one(self):
        assert full_conditional(single_node(1.0), [1], 0) == pytest.approx(0.7310585786, abs=1e-9)

    def test_ln2_edge(self):
        graph, cliques = build_model("chain", (2,))
        model = LogLinearModel.from_params(graph, cliques, {(0, 1): math.log(2)})
        assert full_conditional(model, [0, 1], 0) == pytest.approx(2 / 3)
        assert full_conditional(model, [0, 0], 1) == pytest.approx(0.5)

    def test_matches_joint_ratio(self, rng):
        graph, cliques = build_model("grid2d", (2, 3))
        model = random_model(graph, cliques, rng)
        p = joint_table(model).tensor
        x = [1, 0, 1, 1, 0, 1]
        for m in range(6):
            hi, lo = list(x), list(x)
            hi[m], lo[m] = 1, 0
            expect = p[tuple(hi)] / (p[tuple(hi)] + p[tuple(lo)])
            assert full_conditional(model, x, m) == pytest.approx(expect, abs=1e-12)

    def test_depends_only_on_neighbors(self, rng):
        graph, cliques = build_model("chain", (5,))
        model = random_model(graph, cliques, rng)
        a = full_conditional(model, [0, 1, 0, 1, 0], 2)
        b = full_conditional(model, [1, 1, 0, 1, 1], 2)
        assert a == b


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


class TestGibbs:
    def test_uniform(self):
        graph, cliques = build_model("grid2d", (3, 3))
        model = LogLinearModel(graph, cliques, np.zeros(cliques.num_blocks))
        data = gibbs_sample(model, 10000, SamplerConfig(seed=1))
        assert data.samples.shape == (10000, 9)
        means = data.samples.mean(axis=0)
        assert np.all(np.abs(means - 0.5) <= three_sigma(0.5, 10000))

    def test_single_node(self):
        data = gibbs_sample(single_node(1.0), 10000, SamplerConfig(seed=2))
        p = 1 / (1 + math.exp(-1))
        assert abs(data.samples.mean() - p) <= three_sigma(p, 10000)

    def test_grid_block_means(self):
        graph, cliques = build_model("grid2d", (3, 3))
        model = random_model(graph, cliques, np.random.default_rng(5))
        exact = brute_force(model)
        data = gibbs_sample(model, 50000, SamplerConfig(seed=5))
        x = data.samples.astype(bool)
        for b, p in zip(cliques.blocks, exact.feature_means):
            emp = np.all(x[:, list(b)], axis=1).mean()
            assert abs(emp - p) <= three_sigma(p, 50000), b

    def test_deterministic(self, rng):
        graph, cliques = build_model("chain", (6,))
        model = random_model(graph, cliques, rng)
        cfg = SamplerConfig(burn_in_sweeps=20, thin_sweeps=3, seed=9)
        a = gibbs_sample(model, 500, cfg)
        b = gibbs_sample(model, 500, cfg)
        assert np.array_equal(a.samples, b.samples)
        c = gibbs_sample(model, 500, SamplerConfig(20, 3, 10))
        assert not np.array_equal(a.samples, c.samples)

    def test_prefix_stable_and_chunk_independent(self, rng):
        graph, cliques = build_model("chain", (4,))
        model = random_model(graph, cliques, rng)
        cfg = SamplerConfig(burn_in_sweeps=10, thin_sweeps=2, seed=4)
        long = gibbs_sample(model, 300, cfg)
        short = gibbs_sample(model, 100, cfg, chunk_sweeps=7)
        assert np.array_equal(long.samples[:100], short.samples)

    def test_detailed_balance_two_vars(self):
        graph, cliques = build_model("chain", (2,))
        model = LogLinearModel(graph, cliques, [0.4, -0.7, 0.9])
        n = 40000
        data = gibbs_sample(model, n, SamplerConfig(burn_in_sweeps=100, thin_sweeps=5, seed=3))
        codes = data.samples[:, 0] * 2 + data.samples[:, 1]
        freq = np.bincount(codes, minlength=4) / n
        probs = joint_table(model).probs
        for f, p in zip(freq, probs):
            assert abs(f - p) <= three_sigma(p, n)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            gibbs_sample(single_node(0.0), 0)

    @pytest.mark.parametrize("kwargs", [dict(burn_in_sweeps=-1), dict(thin_sweeps=0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SamplerConfig(**kwargs)


class TestDataset:
    def test_csv_round_trip(self):
        data = Dataset(np.array([[0, 1, 1], [1, 0, 0]]))
        buf = io.StringIO()
        write_csv(data, buf)
        assert buf.getvalue() == "0,1,1\n1,0,0\n"
        back = read_csv(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.samples, data.samples)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[0, 2]]))

    def test_from_table_weights(self):
        graph, cliques = build_model("chain", (2,))
        table = joint_table(LogLinearModel(graph, cliques, [0.1, 0.2, 0.3]))
        data = Dataset.from_table(table)
        assert len(data) == 4
        np.testing.assert_allclose(data.normalized_weights(), table.probs)
