"""Adaptive Metropolis sampler: known targets, determinism, diagnostics."""

import math

import numpy as np
import pytest

from lapbayes.dists import DistributionSpec
from lapbayes.errors import ConfigurationError, InitializationError
from lapbayes.loss import TargetDensity
from lapbayes.sampler import (
    SamplerConfig,
    diagnostics,
    ess_rank_normalized,
    quantile_match,
    quantile_match_report,
    run_chains,
    split_rhat,
)
from lapbayes.space import Block, ParameterSpace


def normal_target():
    sp = ParameterSpace([Block("x", "real", 1)])
    return TargetDensity(sp, lambda p: -0.5 * p["x"] ** 2)


def gamma_target(shape=10.0, rate=1.0):
    sp = ParameterSpace([Block("g", "positive", 1)])
    return TargetDensity(
        sp, lambda p: (shape - 1.0) * math.log(p["g"]) - rate * p["g"]
    )


class TestRunChains:
    def test_standard_normal_moments(self):
        batch = run_chains(normal_target(), SamplerConfig(seed=1))
        x = batch.flat("x")
        assert abs(x.mean()) < 0.05
        assert 0.9 < x.var() < 1.1
        d = batch.diagnostics()
        assert d["parameters"]["x"]["rhat"] < 1.01

    def test_gamma_quantiles(self):
        batch = run_chains(gamma_target(), SamplerConfig(seed=2))
        dev = quantile_match(
            batch.flat("g"), DistributionSpec.gamma(10, 1), [0.1, 0.25, 0.5, 0.75, 0.9]
        )
        assert dev < 0.02

    def test_determinism_bitwise(self):
        cfg = SamplerConfig(seed=77, warmup=500, samples=800)
        b1 = run_chains(gamma_target(), cfg)
        b2 = run_chains(gamma_target(), cfg)
        assert np.array_equal(b1.params, b2.params)
        assert np.array_equal(b1.observables, b2.observables)

    def test_parallel_equals_sequential(self):
        b1 = run_chains(gamma_target(), SamplerConfig(seed=5, warmup=500, samples=500))
        b2 = run_chains(
            gamma_target(), SamplerConfig(seed=5, warmup=500, samples=500, n_workers=4)
        )
        assert np.array_equal(b1.params, b2.params)

    def test_acceptance_rate_tracked(self):
        batch = run_chains(normal_target(), SamplerConfig(seed=3, warmup=1000, samples=2000))
        for rate in batch.acceptance_rates:
            assert 0.1 <= rate <= 0.5

    def test_positive_block_draws_positive(self):
        batch = run_chains(gamma_target(), SamplerConfig(seed=4, warmup=300, samples=500))
        assert np.all(batch.flat("g") > 0)

    def test_initialization_error(self):
        sp = ParameterSpace([Block("x", "real", 1)])
        hopeless = TargetDensity(sp, lambda p: -math.inf)
        with pytest.raises(InitializationError):
            run_chains(hopeless, SamplerConfig(seed=1, warmup=100, samples=10))

    def test_progress_callback(self):
        fractions = []
        run_chains(normal_target(), SamplerConfig(seed=1, warmup=200, samples=200),
                   progress=fractions.append)
        assert fractions and abs(fractions[-1] - 1.0) < 1e-9
        assert all(0 <= f <= 1 for f in fractions)

    def test_thinning_changes_draw_count_not_rate(self):
        b = run_chains(normal_target(), SamplerConfig(seed=9, warmup=300, samples=400, thin=3))
        assert b.n_samples == 400

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SamplerConfig(warmup=10)
        with pytest.raises(ConfigurationError):
            SamplerConfig(target_acceptance=1.5)
        with pytest.raises(ConfigurationError):
            SamplerConfig(n_chains=0)


class TestCsv:
    def test_header_and_determinism(self, tmp_path):
        cfg = SamplerConfig(seed=7, warmup=300, samples=200)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_chains(gamma_target(), cfg).to_csv(p1)
        run_chains(gamma_target(), cfg).to_csv(p2)
        b1, b2 = p1.read_bytes(), p2.read_bytes()
        assert b1 == b2
        header = b1.decode().splitlines()[0]
        assert header == "chain,iter,g"

    def test_diagnostics_sidecar(self, tmp_path):
        cfg = SamplerConfig(seed=7, warmup=300, samples=200)
        batch = run_chains(gamma_target(), cfg)
        out = tmp_path / "d.json"
        batch.write_diagnostics_json(out)
        import json

        doc = json.loads(out.read_text())
        assert "parameters" in doc and "g" in doc["parameters"]


class TestDiagnostics:
    def test_constant_chains_flagged(self):
        x = np.ones((4, 500))
        assert math.isnan(split_rhat(x))
        assert math.isnan(ess_rank_normalized(x))

    def test_independent_chains_rhat_near_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 2000))
        assert split_rhat(x) < 1.01

    def test_offset_chain_detected(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((4, 2000))
        x[0] += 10
        assert split_rhat(x) > 1.1

    def test_single_chain_reported(self):
        batch = run_chains(normal_target(), SamplerConfig(seed=2, n_chains=1,
                                                          warmup=200, samples=300))
        d = batch.diagnostics()
        assert d["parameters"]["x"]["rhat"] is None
        assert any("single chain" in f for f in d["flags"])

    def test_iid_ess_close_to_n(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((4, 5000))
        ess = ess_rank_normalized(x)
        assert ess > 0.8 * x.size


class TestQuantileMatch:
    def test_iid_draws_match(self):
        rng = np.random.default_rng(0)
        spec = DistributionSpec.gamma(10, 1)
        draws = rng.gamma(10, 1.0, 50_000)
        assert quantile_match(draws, spec, np.linspace(0.1, 0.9, 9)) < 0.02

    def test_shifted_draws_fail(self):
        rng = np.random.default_rng(0)
        spec = DistributionSpec.gamma(10, 1)
        draws = rng.gamma(10, 1.0, 50_000) + math.sqrt(10)
        assert quantile_match(draws, spec, [0.1, 0.5, 0.9]) > 0.1

    def test_quasi_exact_grid(self):
        spec = DistributionSpec.lognormal(-0.32, 0.34)
        grid = np.array([spec.quantile(p) for p in np.linspace(0.0005, 0.9995, 20_000)])
        assert quantile_match(grid, spec, [0.1, 0.25, 0.5, 0.75, 0.9]) < 0.005

    def test_zero_reference_uses_absolute(self):
        rng = np.random.default_rng(0)
        spec = DistributionSpec.normal(0.0, 1.0)
        report = quantile_match_report(rng.standard_normal(20_000), spec, [0.5])
        assert report["rows"][0]["absolute"]

    def test_min_draws(self):
        with pytest.raises(ConfigurationError):
            quantile_match(np.ones(10), DistributionSpec.normal(0, 1), [0.5])
