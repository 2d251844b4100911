import io
import math

import numpy as np
import pytest

from lapmrf.harness import (ExperimentConfig, ExperimentError, MetricsRow, aggregate,
                            derive_seed, mean_err, relative_error, rows_to_csv, run_experiment,
                            write_summary)
from lapmrf.sampling import SamplerConfig

FAST_SAMPLER = SamplerConfig(burn_in_sweeps=100, thin_sweeps=2)


def row(err, run=0, params=(0.0,), est="PL", n=10):
    return MetricsRow(est, "m", n, run, err, 0.0, np.array(params, dtype=float), np.zeros(len(params)))


def test_relative_error_example():
    # the reference estimate is the denominator: sqrt(0.02) / sqrt(2.02)
    assert relative_error([1, 1], [1.1, 0.9]) == pytest.approx(math.sqrt(0.02 / 2.02), rel=1e-12)
    # with the roles swapped the denominator is sqrt(2), giving exactly 0.1
    assert relative_error([1.1, 0.9], [1, 1]) == pytest.approx(0.1, rel=1e-12)
    assert relative_error([1, 1], [1, 1]) == 0.0


class TestAggregate:
    def test_single_row(self):
        (s,) = aggregate([row(0.25)])
        assert (s.mean_err, s.std_err, s.runs) == (0.25, 0.0, 1)

    def test_population_std(self):
        (s,) = aggregate([row(0.1, 0), row(0.3, 1)])
        assert s.mean_err == pytest.approx(0.2)
        assert s.std_err == pytest.approx(0.1)

    def test_constant_params_zero_variance(self):
        (s,) = aggregate([row(0.1, r, params=(0.5, -0.2)) for r in range(4)])
        assert s.mean_param_var == 0.0

    def test_param_variance(self):
        (s,) = aggregate([row(0, 0, params=(0.0, 1.0)), row(0, 1, params=(2.0, 1.0))])
        assert s.mean_param_var == pytest.approx(0.5)

    def test_summary_header(self):
        buf = io.StringIO()
        write_summary(aggregate([row(0.1)]), buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("#") and "population" in lines[0]
        assert lines[1] == "estimator,model,N,mean_err,std_err,mean_param_var"


class TestRunExperiment:
    def test_ml_only_zero_error(self):
        cfg = ExperimentConfig(model="chain", dims=(4,), sample_sizes=(50, 200), runs=2,
                               estimators=("ml",), sampler=FAST_SAMPLER)
        rows = run_experiment(cfg)
        assert len(rows) == 4
        assert all(r.err == 0.0 for r in rows)

    def test_byte_identical(self):
        cfg = ExperimentConfig(model="grid2d", dims=(2, 3), sample_sizes=(50, 100), runs=2,
                               sampler=FAST_SAMPLER, record_timing=False)
        a, b = rows_to_csv(run_experiment(cfg)), rows_to_csv(run_experiment(cfg))
        assert a == b
        assert a.splitlines()[0] == "estimator,model,N,run,err,seconds"
        assert len(a.splitlines()) == 1 + 5 * 2 * 2

    def test_prefix_property(self):
        base = dict(model="grid2d", dims=(2, 2), runs=2, sampler=FAST_SAMPLER,
                    estimators=("ml", "pl", "lap_p"), record_timing=False)
        small = run_experiment(ExperimentConfig(sample_sizes=(40, 80), **base))
        large = run_experiment(ExperimentConfig(sample_sizes=(40, 80, 400), **base))
        keep = [r for r in large if r.n <= 80]
        assert rows_to_csv(small) == rows_to_csv(keep)

    def test_rows_sorted(self):
        cfg = ExperimentConfig(model="chain", dims=(3,), sample_sizes=(20, 40), runs=2,
                               sampler=FAST_SAMPLER)
        keys = [(r.estimator, r.n, r.run) for r in run_experiment(cfg)]
        labels = ["ML", "PL", "LAP_E", "LAP_D", "LAP_P"]
        assert keys == sorted(keys, key=lambda k: (labels.index(k[0]), k[1], k[2]))

    def test_truth_uniform_in_range(self):
        cfg = ExperimentConfig(model="chain", dims=(5,), sample_sizes=(20,), runs=3,
                               estimators=("ml",), sampler=FAST_SAMPLER)
        rows = run_experiment(cfg)
        truths = np.array([r.truth for r in rows])
        assert np.all(np.abs(truths) <= 1)
        assert not np.array_equal(truths[0], truths[1])

    def test_fixed_params(self):
        cfg = ExperimentConfig(model="chain", dims=(3,), sample_sizes=(20,), runs=2,
                               estimators=("ml",), sampler=FAST_SAMPLER, fixed_params=True)
        rows = run_experiment(cfg)
        assert np.array_equal(rows[0].truth, rows[1].truth)

    def test_intractable_baseline(self):
        cfg = ExperimentConfig(model="grid2d", dims=(4, 7), backend="brute", runs=1,
                               sample_sizes=(10,))
        with pytest.raises(ExperimentError, match="brute"):
            run_experiment(cfg)

    @pytest.mark.parametrize("kwargs", [dict(runs=0), dict(sample_sizes=(100, 10)),
                                        dict(estimators=("ml", "svm"))])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)

    def test_seed_derivation(self):
        a = derive_seed(3, 1, 0).generate_state(2)
        assert np.array_equal(a, derive_seed(3, 1, 0).generate_state(2))
        assert not np.array_equal(a, derive_seed(3, 1, 1).generate_state(2))
        assert not np.array_equal(a, derive_seed(3, 2, 0).generate_state(2))


@pytest.mark.slow
def test_grid4_mean_error_decreases(grid4_summary):
    for est in ("PL", "LAP_E", "LAP_D", "LAP_P"):
        errs = [mean_err(grid4_summary, est, n) for n in (100, 1000, 10000)]
        assert errs[0] > errs[1] > errs[2], (est, errs)
