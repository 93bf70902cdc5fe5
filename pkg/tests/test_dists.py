"""Distribution evaluator tests: closed-form oracles, quadrature, round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lapbayes.dists import (
    DistributionSpec,
    dist_eval,
    dist_quantile,
    lomax_cdf,
    lomax_quantile,
    student_t_quantile,
)
from lapbayes.errors import DomainError, ParameterDomainError

ALL_SPECS = [
    DistributionSpec.lognormal(-0.32, 0.34),
    DistributionSpec.normal(2.5, 1.5),
    DistributionSpec.gamma(10.0, 1.0),
    DistributionSpec.inverse_gamma(10.0, 10.0),
    DistributionSpec.lomax(10.0, 5.0),
    DistributionSpec.student_t(5.0, 3.7158, 10.0),
    DistributionSpec.beta(2.0, 2.0),
    DistributionSpec.histogram([0.0, 0.5, 1.0, 2.0], [0.25, 0.5, 0.25]),
]


class TestLomax:
    def test_cdf_at_zero(self):
        assert lomax_cdf(0.0, 10.0, 1.0) == 0.0

    def test_closed_form_quantile_oracle(self):
        # x = beta((1-p)^(-1/alpha) - 1) with p = 2/3, alpha=1, beta=2 gives x=4
        assert lomax_cdf(4.0, 1.0, 2.0) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_half_at_scale(self):
        assert lomax_cdf(1.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_and_limit(self):
        xs = np.linspace(0, 500, 2000)
        cdf = lomax_cdf(xs, 2.5, 3.0)
        assert np.all(np.diff(cdf) >= 0)
        assert lomax_cdf(1e9, 2.5, 3.0) == pytest.approx(1.0, abs=1e-8)

    def test_parameter_domain(self):
        with pytest.raises(ParameterDomainError):
            lomax_cdf(1.0, -1.0, 1.0)
        with pytest.raises(ParameterDomainError):
            lomax_cdf(1.0, 1.0, 0.0)

    @given(st.floats(0.01, 0.99), st.floats(0.1, 50), st.floats(0.1, 50))
    @settings(max_examples=100, deadline=None)
    def test_quantile_cdf_roundtrip(self, p, alpha, beta):
        x = lomax_quantile(p, alpha, beta)
        assert lomax_cdf(x, alpha, beta) == pytest.approx(p, abs=1e-10)


class TestStudentT:
    def test_median_is_location(self):
        assert student_t_quantile(0.5, 5.0, 3.716, 10.0) == pytest.approx(5.0, abs=1e-12)

    def test_table_quantile_row1(self):
        # golden hyperparameter beta=16.89 implies scale_sq = beta*11/50
        q = student_t_quantile(0.75, 5.0, 16.89 * 11 / 50, 10.0)
        assert q == pytest.approx(6.35, abs=0.01)

    def test_table_quantile_row4(self):
        q = student_t_quantile(0.75, 3.0, 38.0 * 11 / 50, 10.0)
        assert q == pytest.approx(5.02, abs=0.01)

    def test_symmetry_of_density(self):
        spec = DistributionSpec.student_t(5.0, 2.0, 7.0)
        assert spec.log_pdf(5.0 + 1.3) == pytest.approx(spec.log_pdf(5.0 - 1.3), abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            student_t_quantile(1.5, 0.0, 1.0, 5.0)


class TestDistEval:
    def test_lognormal_median(self):
        spec = DistributionSpec.lognormal(-0.32, 0.34)
        assert dist_quantile(spec, 0.5) == pytest.approx(math.exp(-0.32), abs=1e-4)

    def test_gamma_median_against_quadrature_oracle(self):
        # independent oracle: integrate the pdf and bisect for the 0.5 crossing
        spec = DistributionSpec.gamma(10.0, 1.0)

        def cdf_quad(x):
            val, _ = quad(lambda t: math.exp(spec.log_pdf(t)), 0, x, limit=200)
            return val

        lo, hi = 5.0, 15.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if cdf_quad(mid) < 0.5:
                lo = mid
            else:
                hi = mid
        oracle_median = 0.5 * (lo + hi)
        assert oracle_median == pytest.approx(9.669, abs=0.01)
        assert dist_quantile(spec, 0.5) == pytest.approx(oracle_median, abs=1e-6)

    def test_histogram_flat(self):
        spec = DistributionSpec.histogram([0.0, 1.0], [1.0])
        lp, cdf = dist_eval(spec, 0.5)
        assert lp == pytest.approx(0.0, abs=1e-12)
        assert cdf == pytest.approx(0.5, abs=1e-12)
        assert dist_eval(spec, 2.0)[0] == -math.inf

    def test_outside_support_is_neg_inf_not_error(self):
        spec = DistributionSpec.gamma(2.0, 1.0)
        assert spec.log_pdf(-1.0) == -math.inf

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_pdf_integrates_to_one(self, spec):
        lo, hi = spec.effective_support()
        if not math.isfinite(lo):
            lo = spec.quantile(1e-10)
        if not math.isfinite(hi):
            hi = spec.quantile(1 - 1e-10)
        val, err = quad(lambda x: math.exp(spec.log_pdf(x)), lo, hi, limit=400)
        assert val == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_quantile_cdf_identity_grid(self, spec):
        for p in np.linspace(0.01, 0.99, 99):
            assert spec.cdf(spec.quantile(p)) == pytest.approx(p, abs=1e-8)

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            ALL_SPECS[0].quantile(0.0)
        with pytest.raises(DomainError):
            ALL_SPECS[0].quantile(1.0)


class TestValidation:
    def test_negative_scale_rejected(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec.lognormal(0.0, -1.0)
        with pytest.raises(ParameterDomainError):
            DistributionSpec.gamma(0.0, 1.0)

    def test_histogram_weights_must_sum_to_one(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec.histogram([0, 1, 2], [0.5, 0.6])

    def test_histogram_edges_increasing(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec.histogram([0, 0, 1], [0.5, 0.5])

    def test_histogram_negative_weight(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec.histogram([0, 1, 2], [1.5, -0.5])


class TestTruncation:
    def test_truncated_renormalizes(self):
        spec = DistributionSpec.normal(0.0, 1.0, support=(-1.0, 1.0))
        val, _ = quad(lambda x: math.exp(spec.log_pdf(x)), -1, 1)
        assert val == pytest.approx(1.0, abs=1e-9)
        assert spec.log_pdf(1.5) == -math.inf

    def test_truncated_quantiles(self):
        spec = DistributionSpec.lognormal(-0.32, 0.34, support=(0.5, 1.2))
        assert spec.quantile(1e-9) == pytest.approx(0.5, abs=1e-6)
        assert spec.cdf(1.2) == 1.0


class TestJson:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
    def test_roundtrip(self, spec):
        doc = spec.to_json()
        back = DistributionSpec.from_json(doc)
        assert back.family == spec.family
        for p in (0.1, 0.5, 0.9):
            assert back.quantile(p) == pytest.approx(spec.quantile(p), rel=1e-12)

    def test_histogram_json_shape(self):
        spec = DistributionSpec.histogram([0, 1], [1.0])
        doc = spec.to_json()
        assert doc == {"family": "histogram", "edges": [0, 1], "weights": [1.0]}
