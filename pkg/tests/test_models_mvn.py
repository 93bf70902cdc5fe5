"""MVN elicitation model: priors, flattening modes, Fisher losses."""

import math

import numpy as np
import pytest

from lapbayes.corrmats import concordance_to_correlation, fisher_se, pair_order
from lapbayes.errors import ConfigurationError
from lapbayes.models.mvn import ConcordanceBelief, MvnElicitationModel
from lapbayes.sampler import SamplerConfig, run_chains
from lapbayes.solvers import NormalGammaHyper, fit_student_t_hyperparams

EXAMPLE_QUANTILES = [(5.0, 6.35), (2.0, 2.67), (1.0, 1.34), (3.0, 5.02)]
N_E = 10


def example_hypers():
    return [fit_student_t_hyperparams(q50, q75, N_E) for q50, q75 in EXAMPLE_QUANTILES]


def ks_statistic(x, cdf):
    x = np.sort(np.asarray(x))
    n = x.size
    c = cdf(x)
    steps = np.arange(1, n + 1) / n
    return max(float(np.max(np.abs(c - steps))), float(np.max(np.abs(c - (steps - 1 / n)))))


class TestConstruction:
    def test_needs_k_hypers(self):
        with pytest.raises(ConfigurationError):
            MvnElicitationModel(k=4, hypers=example_hypers()[:2])

    def test_duplicate_pairs_rejected(self):
        c = ConcordanceBelief((1, 2), 0.3, 0.4)
        with pytest.raises(ConfigurationError):
            MvnElicitationModel(k=4, hypers=example_hypers(), concordances=[c, c])

    def test_pair_out_of_range(self):
        with pytest.raises(ConfigurationError):
            MvnElicitationModel(k=2, hypers=example_hypers()[:2],
                                concordances=[ConcordanceBelief((1, 3), 0.3, 0.4)])

    def test_marginal_beta_requires_anchors(self):
        with pytest.raises(ConfigurationError, match="improper"):
            MvnElicitationModel(k=4, hypers=example_hypers(),
                                flattening="marginal_beta").build_target()

    def test_json_roundtrip(self):
        concs = [ConcordanceBelief((1, 2), 0.3, 0.37796)]
        model = MvnElicitationModel(k=4, hypers=example_hypers(), concordances=concs)
        doc = model.to_json()
        back = MvnElicitationModel.from_json({k: v for k, v in doc.items() if k != "family"})
        assert back.k == 4
        assert back.concordances[0].pair == (1, 2)

    def test_from_json_with_quantiles_and_p(self):
        doc = {
            "k": 4, "n_e": 10,
            "marginal_quantiles": EXAMPLE_QUANTILES,
            "concordances": [{"pair": [1, 3], "p": 0.25}],
        }
        model = MvnElicitationModel.from_json(doc)
        assert model.hypers[0].beta_ng == pytest.approx(16.9154, abs=1e-3)
        assert model.concordances[0].r_tilde == pytest.approx(
            concordance_to_correlation(0.25), abs=1e-12
        )
        assert model.concordances[0].se == pytest.approx(fisher_se(10), abs=1e-12)


class TestPriorOnly:
    def test_ng_marginals_match_prior_predictive_logic(self):
        # no data, no losses: mu_i draws should match the NG prior exactly;
        # tau_i ~ Gamma(alpha, beta), mu_i | tau ~ N(mu0, 1/(gamma tau))
        hypers = example_hypers()
        model = MvnElicitationModel(k=4, hypers=hypers, flattening="none")
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=12, warmup=1500, samples=6000, thin=4))
        from scipy.stats import kstest

        # draws are autocorrelated; 0.06 leaves ~2x headroom over the
        # expected KS fluctuation at the realized effective sample size
        for i, h in enumerate(hypers, start=1):
            tau = batch.flat(f"tau_{i}")
            ks = kstest(tau, "gamma", args=(h.alpha_ng, 0, 1.0 / h.beta_ng)).statistic
            assert ks < 0.06, f"tau_{i} KS {ks}"
            # standardized mu given tau is standard normal
            mu = batch.flat(f"mu_{i}")
            zs = (mu - h.mu0) * np.sqrt(h.gamma_ng * tau)
            ks2 = kstest(zs, "norm").statistic
            assert ks2 < 0.06, f"mu_{i} KS {ks2}"

    def test_unflattened_marginals_beta22(self):
        # wide prior-only marginals need a long adaptation window
        model = MvnElicitationModel(k=4, hypers=example_hypers(), flattening="none")
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=13, warmup=6000, samples=5000, thin=10))
        beta22_cdf = lambda r: 0.5 + 0.75 * (r - r**3 / 3)
        for i, j in pair_order(4):
            ks = ks_statistic(batch.flat(f"S_{i}_{j}"), beta22_cdf)
            assert ks < 0.06, f"S_{i}_{j} KS {ks}"

    def test_flattened_marginals_uniform(self):
        model = MvnElicitationModel(k=4, hypers=example_hypers(),
                                    flattening="uniform_marginal")
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=14, warmup=6000, samples=5000, thin=10))
        uniform_cdf = lambda r: (r + 1) / 2
        for i, j in pair_order(4):
            ks = ks_statistic(batch.flat(f"S_{i}_{j}"), uniform_cdf)
            assert ks < 0.06, f"S_{i}_{j} KS {ks}"

    def test_every_draw_positive_definite(self):
        model = MvnElicitationModel(k=3, hypers=example_hypers()[:3],
                                    flattening="uniform_marginal")
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=15, warmup=500, samples=500))
        for c in range(batch.n_chains):
            for s in range(0, batch.n_samples, 50):
                R = np.eye(3)
                for (i, j) in pair_order(3):
                    R[i - 1, j - 1] = R[j - 1, i - 1] = batch.params[
                        c, s, batch.column_names.index(f"S_{i}_{j}")
                    ]
                assert np.linalg.eigvalsh(R)[0] > 0


class TestFisherLoss:
    def test_single_pair_closed_form(self):
        # k=2, flat prior on r, Fisher loss: the posterior over z = artanh(r)
        # has density N(z; z0, psi) * sech^2(z); check sampled quantiles
        # against grid integration of that exact density
        hypers = [NormalGammaHyper(0.0, 10.0, 5.0, 5.0)] * 2
        model = MvnElicitationModel(
            k=2, hypers=hypers,
            concordances=[ConcordanceBelief((1, 2), 0.0, fisher_se(10))],
            flattening="uniform_marginal",
        )
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=16, warmup=2000, samples=10_000, thin=2))
        z = np.arctanh(batch.flat("S_1_2"))

        psi = fisher_se(10)
        grid = np.linspace(-3, 3, 4001)
        dens = np.exp(-0.5 * (grid / psi) ** 2) / np.cosh(grid) ** 2
        cdf = np.cumsum(dens)
        cdf /= cdf[-1]
        for p in (0.1, 0.25, 0.5, 0.75, 0.9):
            exact = float(np.interp(p, cdf, grid))
            emp = float(np.quantile(z, p))
            assert emp == pytest.approx(exact, abs=0.02), f"p={p}"

    def test_sech2_attenuation_vs_naive_normal(self):
        # quantifies the gap the tanh Jacobian introduces relative to
        # treating artanh(r) as exactly N(artanh r0, psi)
        psi = fisher_se(10)
        grid = np.linspace(-3, 3, 4001)
        dens = np.exp(-0.5 * (grid / psi) ** 2) / np.cosh(grid) ** 2
        cdf = np.cumsum(dens)
        cdf /= cdf[-1]
        q90_exact = float(np.interp(0.9, cdf, grid))
        q90_naive = 1.2816 * psi
        assert abs(q90_exact - q90_naive) / q90_naive > 0.08


class TestWithData:
    def test_posterior_concentrates_near_truth(self):
        rng = np.random.default_rng(42)
        k = 3
        mu_true = np.array([1.0, -0.5, 2.0])
        R_true = np.eye(k)
        R_true[0, 1] = R_true[1, 0] = 0.5
        sd_true = np.array([1.0, 2.0, 0.5])
        cov = R_true * np.outer(sd_true, sd_true)
        y = rng.multivariate_normal(mu_true, cov, size=400)
        hypers = [NormalGammaHyper(0.0, 2.0, 1.0, 1.0)] * k
        model = MvnElicitationModel(k=k, hypers=hypers, flattening="none", data=y)
        batch = run_chains(model.build_target(),
                           SamplerConfig(seed=17, warmup=4000, samples=3000, thin=2))
        d = batch.diagnostics()
        assert max(v["rhat"] for v in d["parameters"].values()) < 1.05
        ybar = y.mean(axis=0)
        for i in range(k):
            mu_hat = float(np.mean(batch.flat(f"mu_{i + 1}")))
            assert mu_hat == pytest.approx(ybar[i], abs=4.5 * math.sqrt(cov[i, i] / 400))
        r12 = float(np.mean(batch.flat("S_1_2")))
        assert r12 == pytest.approx(float(np.corrcoef(y.T)[0, 1]), abs=0.05)
        tau1 = float(np.mean(batch.flat("tau_1")))
        assert tau1 == pytest.approx(1.0 / y[:, 0].var(ddof=1), rel=0.15)


class TestCoherencyIntegration:
    def test_reports_from_elicited_values(self):
        concs = [
            ConcordanceBelief((1, 2), concordance_to_correlation(0.60), fisher_se(10)),
            ConcordanceBelief((1, 3), concordance_to_correlation(0.25), fisher_se(10)),
            ConcordanceBelief((2, 3), concordance_to_correlation(0.40), fisher_se(10)),
        ]
        model = MvnElicitationModel(k=3, hypers=example_hypers()[:3], concordances=concs)
        reports = model.coherency_reports()
        assert len(reports) == 3
        for rep in reports:
            assert rep.in_interval
            assert rep.lo < rep.hi
