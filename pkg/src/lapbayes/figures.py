"""Deterministic plot-ready datasets for the eight reference figures.

Each figure becomes one or more CSV files plus a small JSON manifest with
axis labels and series names; nothing is rendered.  Sampling-based figures
take a seed and are reproducible byte for byte.
"""

from __future__ import annotations

import json
import os

import numpy as np

from lapbayes.dists import DistributionSpec
from lapbayes.errors import ConfigurationError
from lapbayes.loss import ExpertBelief
from lapbayes.models.exponential import ExponentialSurvivalModel, dap_density_median_survival
from lapbayes.models.mvn import ConcordanceBelief, MvnElicitationModel
from lapbayes.models.regression import RepeatedMeasuresModel, generate_exercise_data
from lapbayes.corrmats import concordance_to_correlation, fisher_se, pair_order
from lapbayes.sampler import SamplerConfig, run_chains
from lapbayes.solvers import (
    dap_median_survival_quantile,
    dap_survival_prob,
    ess_to_tertiles,
    fit_student_t_hyperparams,
)
from lapbayes.summaries import gaussian_kde_grid

FIGURES = (1, 2, 3, 4, 5, 6, 7, 8)

EXAMPLE_QUANTILES = [(5.0, 6.35), (2.0, 2.67), (1.0, 1.34), (3.0, 5.02)]
EXAMPLE_CONCORDANCES = {
    (1, 2): 0.60, (1, 3): 0.25, (2, 3): 0.40,
    (1, 4): 0.50, (2, 4): 0.50, (3, 4): 0.50,
}
EXPERT_LN = (-0.32, 0.34)


def _write_csv(path, header, columns):
    rows = len(columns[0])
    for col in columns:
        if len(col) != rows:
            raise ConfigurationError("figure columns must have equal length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")
    return path


def _fmt(v):
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _manifest(out_dir, fig, entries):
    path = os.path.join(out_dir, f"figure{fig}_manifest.json")
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2, sort_keys=True)
    return path


def figure_data(fig: int, out_dir: str, seed: int = 0) -> list[str]:
    """Emit the dataset(s) for one figure; returns the files written."""
    os.makedirs(out_dir, exist_ok=True)
    builders = {
        1: _figure1, 2: _figure2, 3: _figure3, 4: _figure4,
        5: _figure5, 6: _figure6, 7: _figure7, 8: _figure8,
    }
    if fig not in builders:
        raise ConfigurationError(f"unknown figure {fig}; expected one of {FIGURES}")
    return builders[fig](out_dir, seed)


def _figure1(out_dir, seed):
    ess_values = (1.0, 10.0, 25.0, 100.0)
    median = 1.0
    rows = [ess_to_tertiles(a, median) for a in ess_values]
    path = _write_csv(
        os.path.join(out_dir, "figure1_lomax_tertiles.csv"),
        ["ess", "q13", "median", "q23"],
        [list(ess_values), [r.q13 for r in rows], [median] * len(rows),
         [r.q23 for r in rows]],
    )
    man = _manifest(out_dir, 1, {
        "title": "Lomax prior-predictive tertiles at matched median survival",
        "x": "effective sample size",
        "series": ["q13", "median", "q23"],
        "median": median,
    })
    return [path, man]


def _figure2(out_dir, seed, alpha=10.0, ytilde=1.0, t=1.0):
    spec = DistributionSpec.inverse_gamma(alpha, alpha * ytilde)
    s = np.linspace(1e-4, 1 - 1e-4, 512)
    psi = -t / np.log(s)
    pdf = np.exp([spec.log_pdf(p) for p in psi]) * t / (s * np.log(s) ** 2)
    tau_half = dap_survival_prob(alpha, ytilde, t, 0.5)
    gammas = np.linspace(0.01, 0.99, 99)
    taus = [dap_survival_prob(alpha, ytilde, t, g) for g in gammas]
    p1 = _write_csv(
        os.path.join(out_dir, "figure2_survival_prior_density.csv"),
        ["survival", "pdf"], [s, pdf],
    )
    p2 = _write_csv(
        os.path.join(out_dir, "figure2_exceedance.csv"),
        ["gamma", "tau"], [gammas, taus],
    )
    man = _manifest(out_dir, 2, {
        "title": f"Prior on survival at t={t} under IG({alpha:g}, {alpha * ytilde:g})",
        "x": "survival fraction",
        "series": ["pdf", "tau = P(survival > gamma)"],
        "tau_at_gamma_0.5": tau_half,
    })
    return [p1, p2, man]


def _figure3(out_dir, seed, alpha=10.0, ytilde=1.0):
    beta = alpha * ytilde
    grid = np.linspace(1e-3, 3.0, 512)
    pdf = [dap_density_median_survival(alpha, beta, t) for t in grid]
    path = _write_csv(
        os.path.join(out_dir, "figure3_median_survival_prior.csv"),
        ["t_med", "pdf"], [grid, pdf],
    )
    man = _manifest(out_dir, 3, {
        "title": f"Prior on median survival under IG({alpha:g}, {beta:g})",
        "x": "median survival",
        "median": dap_median_survival_quantile(alpha, ytilde, 0.5),
    })
    return [path, man]


def _mvn_model(flattening, with_beliefs, n_e=10):
    hypers = [fit_student_t_hyperparams(q50, q75, n_e) for q50, q75 in EXAMPLE_QUANTILES]
    concs = []
    if with_beliefs:
        concs = [
            ConcordanceBelief(pair, concordance_to_correlation(p), fisher_se(n_e))
            for pair, p in EXAMPLE_CONCORDANCES.items()
        ]
    return MvnElicitationModel(k=4, hypers=hypers, eta=1.0,
                               concordances=concs, flattening=flattening)


def _figure4(out_dir, seed):
    grid = np.linspace(-0.999, 0.999, 512)
    beta22 = 0.75 * (1.0 - grid**2)  # LKJ(1), k=4 marginal on [-1, 1]
    target = _mvn_model("uniform_marginal", with_beliefs=False).build_target()
    batch = run_chains(
        target, SamplerConfig(seed=seed, warmup=2000, samples=6000, thin=4)
    )
    draws = batch.flat("S_1_2")
    _, pdf = gaussian_kde_grid(draws, 512, lo=grid[0], hi=grid[-1])
    path = _write_csv(
        os.path.join(out_dir, "figure4_marginal_flattening.csv"),
        ["r", "lkj_eta1_pdf", "flattened_pdf"], [grid, beta22, pdf],
    )
    man = _manifest(out_dir, 4, {
        "title": "Correlation marginal: standard LKJ(1) vs flattened (k=4)",
        "x": "correlation",
        "series": ["lkj_eta1_pdf", "flattened_pdf"],
        "seed": seed,
    })
    return [path, man]


def _figure5(out_dir, seed):
    mu, sd = EXPERT_LN
    belief = ExpertBelief("t_med", DistributionSpec.lognormal(mu, sd))
    model = ExponentialSurvivalModel(parameterization="median_direct")
    # the <0.05 pointwise overlay gap needs ~1e5 effective draws at the mode
    batch = run_chains(model.build_target([belief]),
                       SamplerConfig(seed=seed, warmup=2000, samples=50_000, thin=2))
    draws = batch.flat("t_med")
    spec = DistributionSpec.lognormal(mu, sd)
    lo, hi = spec.quantile(0.0005), spec.quantile(0.9995)
    grid, kde = gaussian_kde_grid(draws, 512, lo=lo, hi=hi)
    expert = np.exp([spec.log_pdf(x) for x in grid])
    path = _write_csv(
        os.path.join(out_dir, "figure5_tmed_posterior.csv"),
        ["t_med", "posterior_kde", "expert_pdf"], [grid, kde, expert],
    )
    man = _manifest(out_dir, 5, {
        "title": "Posterior median survival induced by the loss function",
        "x": "median survival",
        "expert": {"family": "lognormal", "mu": mu, "sigma": sd},
        "seed": seed,
    })
    return [path, man]


def _figure6(out_dir, seed):
    target = _mvn_model("marginal_beta", with_beliefs=True).build_target()
    batch = run_chains(
        target, SamplerConfig(seed=seed, warmup=3000, samples=8000, thin=3)
    )
    pairs = pair_order(4)
    conc_grid = np.linspace(0.001, 0.999, 512)
    conc_cols = [conc_grid]
    corr_grid = np.linspace(-0.999, 0.999, 512)
    corr_cols = [corr_grid]
    for i, j in pairs:
        _, cpdf = gaussian_kde_grid(batch.flat(f"conc_{i}_{j}"), 512,
                                    lo=conc_grid[0], hi=conc_grid[-1])
        conc_cols.append(cpdf)
        _, rpdf = gaussian_kde_grid(batch.flat(f"S_{i}_{j}"), 512,
                                    lo=corr_grid[0], hi=corr_grid[-1])
        corr_cols.append(rpdf)
    headers_c = ["concordance"] + [f"dens_{i}_{j}" for i, j in pairs]
    headers_r = ["correlation"] + [f"dens_{i}_{j}" for i, j in pairs]
    p1 = _write_csv(os.path.join(out_dir, "figure6a_concordance_densities.csv"),
                    headers_c, conc_cols)
    p2 = _write_csv(os.path.join(out_dir, "figure6b_correlation_densities.csv"),
                    headers_r, corr_cols)
    man = _manifest(out_dir, 6, {
        "title": "Concordance and correlation posteriors under the loss function",
        "elicited_concordances": {f"{i}_{j}": p for (i, j), p in EXAMPLE_CONCORDANCES.items()},
        "seed": seed,
    })
    return [p1, p2, man]


def _regression_batches(seed):
    data = generate_exercise_data()
    model = RepeatedMeasuresModel(data=data)
    belief = ExpertBelief("xi", DistributionSpec.normal(2.5, 1.5))
    cfg = SamplerConfig(seed=seed, warmup=10_000, samples=6000, thin=5)
    data_only = run_chains(model.build_target(), cfg)
    with_belief = run_chains(model.build_target([belief]), cfg)
    return model, data_only, with_belief


def _figure7(out_dir, seed):
    model, data_only, with_belief = _regression_batches(seed)
    lookup = model._poly_lookup()
    times = model.design_times
    rows_x = np.array([model._row("WI", t, lookup) for t in times])

    def mean_curve(batch):
        beta_cols = [f"beta_{i + 1}" for i in range(model.n_fixed)]
        beta_mean = np.array([float(np.mean(batch.flat(c))) for c in beta_cols])
        return rows_x @ beta_mean

    path = _write_csv(
        os.path.join(out_dir, "figure7_fixed_effect_curves.csv"),
        ["time", "mean_data_only", "mean_with_belief"],
        [times, mean_curve(data_only), mean_curve(with_belief)],
    )
    man = _manifest(out_dir, 7, {
        "title": "WI fixed-effect mean curve with and without expert opinion",
        "x": "time",
        "series": ["mean_data_only", "mean_with_belief"],
        "seed": seed,
    })
    return [path, man]


def _figure8(out_dir, seed):
    _, data_only, with_belief = _regression_batches(seed)
    xi_d = data_only.flat("xi")
    xi_b = with_belief.flat("xi")
    spec = DistributionSpec.normal(2.5, 1.5)
    lo = min(xi_d.min(), xi_b.min(), spec.quantile(0.001))
    hi = max(xi_d.max(), xi_b.max(), spec.quantile(0.999))
    grid, kd = gaussian_kde_grid(xi_d, 512, lo=lo, hi=hi)
    _, kb = gaussian_kde_grid(xi_b, 512, lo=lo, hi=hi)
    expert = np.exp([spec.log_pdf(x) for x in grid])
    path = _write_csv(
        os.path.join(out_dir, "figure8_change_from_baseline.csv"),
        ["xi", "dens_data_only", "dens_with_belief", "belief_pdf"],
        [grid, kd, kb, expert],
    )
    man = _manifest(out_dir, 8, {
        "title": "Change from baseline with and without expert opinion",
        "x": "change from baseline",
        "belief": {"family": "normal", "mu": 2.5, "sigma": 1.5},
        "seed": seed,
    })
    return [path, man]
