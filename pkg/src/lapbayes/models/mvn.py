"""Multivariate normal model with NormalGamma marginals, an LKJ correlation
prior, Fisher-z concordance losses and optional flattening.

Flattening modes for the correlation prior:

- ``none``: plain LkjCorr(eta).
- ``joint_lkj``: the loss cancels the joint LKJ density exactly, leaving the
  uniform distribution over the positive-definite cone (a no-op at eta = 1).
- ``marginal_beta``: divides the Beta(eta-1+k/2) marginal out of the joint,
  one factor per pair, so no pair's belief is attenuated by the prior's
  pull toward zero.  On its own this reweighting is improper for k >= 4:
  the 1/prod(1-r_ij^2) factor log-diverges at the comonotone corners of the
  PD cone, so it is only accepted when every pair carries an anchoring
  concordance belief (or data), which restores integrability.
- ``uniform_marginal``: a proper flattening for belief-free use; reweights
  the canonical partial correlations per vine tree level so every pairwise
  marginal is (near) uniform on [-1, 1].  Exact for k <= 3; for k = 4 the
  level shapes are calibrated numerically (max marginal-CDF gap ~0.013).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln

from lapbayes.corrmats import (
    cpc_vine_levels,
    fisher_se,
    fisher_z,
    pair_order,
    symmetric_beta_log_pdf,
)
from lapbayes.dists import DistributionSpec
from lapbayes.errors import ConfigurationError
from lapbayes.loss import ExpertBelief, LossTerm, ObservableFunctional, TargetDensity
from lapbayes.solvers import NormalGammaHyper, coherency_intervals
from lapbayes.space import Block, ParameterSpace

FLATTENING_MODES = ("marginal_beta", "uniform_marginal", "joint_lkj", "none")

# Level shapes for the near-uniform-marginal flattening at k = 4, calibrated
# by Monte Carlo against the uniform target (level 1 is exactly uniform).
_CALIBRATED_LEVELS = {
    2: {1: 1.0},
    3: {1: 1.0, 2: 0.5},
    4: {1: 1.0, 2: 0.51, 3: 0.1},
}


def flattening_level_shapes(k: int) -> dict[int, float]:
    """Target Beta shape per vine level for near-uniform r_ij marginals."""
    if k in _CALIBRATED_LEVELS:
        return dict(_CALIBRATED_LEVELS[k])
    # beyond the calibrated table: keep level 1 uniform and shrink deeper
    # levels the way the k=4 calibration does, floored away from impropriety
    shapes = {1: 1.0}
    for m in range(2, k):
        shapes[m] = max(0.1, 1.0 - 0.45 * (m - 1))
    return shapes


@dataclass(frozen=True)
class ConcordanceBelief:
    """Elicited concordance for one pair, stored on the correlation scale."""

    pair: tuple[int, int]  # 1-based, i < j
    r_tilde: float
    se: float

    def __post_init__(self):
        i, j = self.pair
        if not (0 < i < j):
            raise ConfigurationError(f"pair must satisfy 1 <= i < j, got {self.pair}")
        if not -1.0 < self.r_tilde < 1.0:
            raise ConfigurationError("elicited correlation must be in (-1, 1)")
        if self.se <= 0:
            raise ConfigurationError("Fisher standard error must be positive")


class MvnElicitationModel:
    def __init__(self, k: int, hypers, eta: float = 1.0, concordances=(),
                 flattening: str = "marginal_beta", data: np.ndarray | None = None):
        if k < 2:
            raise ConfigurationError("k must be >= 2")
        hypers = list(hypers)
        if len(hypers) != k:
            raise ConfigurationError(f"need {k} NormalGamma hypers, got {len(hypers)}")
        if flattening not in FLATTENING_MODES:
            raise ConfigurationError(
                f"unknown flattening {flattening!r}; expected one of {FLATTENING_MODES}"
            )
        if eta <= 0:
            raise ConfigurationError("eta must be positive")
        self.k = k
        self.hypers: list[NormalGammaHyper] = hypers
        self.eta = float(eta)
        self.concordances = list(concordances)
        seen = set()
        for c in self.concordances:
            if c.pair in seen:
                raise ConfigurationError(f"duplicate concordance pair {c.pair}")
            if c.pair[1] > k:
                raise ConfigurationError(f"pair {c.pair} out of range for k={k}")
            seen.add(c.pair)
        self.flattening = flattening
        self.data = None if data is None else np.asarray(data, dtype=float)
        if self.data is not None and self.data.shape[1] != k:
            raise ConfigurationError(
                f"data must have k={k} columns, got {self.data.shape[1]}"
            )

    # -- construction ----------------------------------------------------------

    @staticmethod
    def from_json(doc: dict, data: np.ndarray | None = None):
        k = int(doc["k"])
        n_e = doc.get("n_e")
        if "hypers" in doc:
            hypers = [
                NormalGammaHyper(h["mu0"], h["gamma"], h["alpha"], h["beta"])
                for h in doc["hypers"]
            ]
        elif "marginal_quantiles" in doc:
            from lapbayes.solvers import fit_student_t_hyperparams

            if n_e is None:
                raise ConfigurationError("marginal_quantiles need n_e")
            hypers = [
                fit_student_t_hyperparams(q50, q75, n_e)
                for q50, q75 in doc["marginal_quantiles"]
            ]
        else:
            raise ConfigurationError('mvn model needs "hypers" or "marginal_quantiles"')
        concordances = []
        for c in doc.get("concordances", []):
            pair = tuple(int(x) for x in c["pair"])
            if "r" in c:
                r = float(c["r"])
            else:
                from lapbayes.corrmats import concordance_to_correlation

                r = concordance_to_correlation(float(c["p"]))
            se = float(c["se"]) if "se" in c else fisher_se(float(c.get("n_e", n_e)))
            concordances.append(ConcordanceBelief(pair, r, se))
        return MvnElicitationModel(
            k=k,
            hypers=hypers,
            eta=float(doc.get("eta", 1.0)),
            concordances=concordances,
            flattening=doc.get("flattening", "marginal_beta"),
            data=data,
        )

    def to_json(self):
        return {
            "family": "mvn",
            "k": self.k,
            "eta": self.eta,
            "flattening": self.flattening,
            "hypers": [h.to_json() for h in self.hypers],
            "concordances": [
                {"pair": list(c.pair), "r": c.r_tilde, "se": c.se}
                for c in self.concordances
            ],
        }

    # -- coherency ----------------------------------------------------------------

    def elicited_matrix(self) -> np.ndarray:
        """Correlation matrix of elicited point values (zeros where absent)."""
        R = np.eye(self.k)
        for c in self.concordances:
            i, j = c.pair[0] - 1, c.pair[1] - 1
            R[i, j] = R[j, i] = c.r_tilde
        return R

    def coherency_reports(self):
        pairs = [c.pair for c in self.concordances]
        if not pairs:
            return []
        return coherency_intervals(self.elicited_matrix(), pairs)

    # -- target -----------------------------------------------------------------

    def build_target(self, beliefs=()) -> TargetDensity:
        if beliefs:
            raise ConfigurationError(
                "the MVN model takes concordance beliefs at construction; "
                "generic observable beliefs are not part of this family"
            )
        k = self.k
        mu0 = np.array([h.mu0 for h in self.hypers])
        gam = np.array([h.gamma_ng for h in self.hypers])
        alf = np.array([h.alpha_ng for h in self.hypers])
        bet = np.array([h.beta_ng for h in self.hypers])
        if self.data is None:
            # non-centered mu | tau: the location/precision funnel of the
            # NormalGamma prior samples as independent standard normals
            space = ParameterSpace([
                Block("tau", "positive", k),
                Block("mu", "anchored_location", k, anchor="tau",
                      loc=tuple(mu0), scale_mult=tuple(gam)),
                Block("S", "correlation", k=k),
            ])
        else:
            # data concentrates the posterior (no funnel); start the sampler
            # at the sample moments instead
            n_obs = self.data.shape[0]
            ybar = self.data.mean(axis=0)
            var = self.data.var(axis=0, ddof=1)
            space = ParameterSpace([
                Block("tau", "positive", k,
                      center=tuple(float(v) for v in np.log(1.0 / var)),
                      spread=(max(3.0 / math.sqrt(n_obs), 0.05),) * k),
                Block("mu", "real", k,
                      center=tuple(float(m) for m in ybar),
                      spread=tuple(float(max(3.0 * math.sqrt(v / n_obs), 1e-3))
                                   for v in var)),
                Block("S", "correlation", k=k),
            ])
        ng_const = float(np.sum(alf * np.log(bet) - gammaln(alf) + 0.5 * np.log(gam))
                         - 0.5 * k * math.log(2.0 * math.pi))

        eta = self.eta
        mode = self.flattening
        levels = np.array(cpc_vine_levels(k))
        if mode == "uniform_marginal":
            shapes = flattening_level_shapes(k)
            level_b = np.array([shapes[m] for m in levels])
        if mode == "marginal_beta" and self.data is None:
            anchored = {c.pair for c in self.concordances}
            missing = [pq for pq in pair_order(k) if pq not in anchored]
            if missing:
                raise ConfigurationError(
                    "marginal_beta flattening is improper without an anchoring "
                    f"belief on every pair; pairs {missing} have none.  Use "
                    "flattening='uniform_marginal' for belief-free runs."
                )
        marg_a = eta - 1.0 + k / 2.0

        def log_prior(p):
            mu, tau = p["mu"], p["tau"]
            z = p["_S_cpc"]
            jac_chol = p["_S_cpc_jac"]
            lp = ng_const
            lp += float(np.sum((alf - 0.5) * np.log(tau) - bet * tau
                               - 0.5 * gam * tau * (mu - mu0) ** 2))
            if mode == "uniform_marginal":
                # independent CPC law with calibrated level shapes; subtract
                # the Cholesky Jacobian the space adds so the z-density stands
                lp -= jac_chol
                for zz, b in zip(z, level_b):
                    lp += symmetric_beta_log_pdf(float(zz), float(b))
            elif mode == "marginal_beta":
                if eta != 1.0:
                    lp += (eta - 1.0) * float(np.sum(np.log1p(-z * z)))
                R = p["S"]
                for i, j in pair_order(k):
                    lp -= symmetric_beta_log_pdf(float(R[i - 1, j - 1]), marg_a)
            elif mode == "joint_lkj":
                pass  # LKJ density canceled by the loss: uniform over the cone
            else:
                if eta != 1.0:
                    lp += (eta - 1.0) * float(np.sum(np.log1p(-z * z)))
            return lp

        terms = []
        for c in self.concordances:
            i, j = c.pair
            fn = ObservableFunctional(
                f"fisher_z_{i}_{j}",
                lambda p, _i=i - 1, _j=j - 1: math.atanh(p["S"][_i, _j]),
            )
            belief = ExpertBelief(
                fn.name,
                DistributionSpec.normal(fisher_z(c.r_tilde), c.se),
                description=f"concordance belief for pair ({i},{j})",
            )
            terms.append(LossTerm(fn, belief))

        log_likelihood = None
        if self.data is not None:
            y = self.data
            n = y.shape[0]
            ybar = y.mean(axis=0)
            sc = (y - ybar).T @ (y - ybar)

            def log_likelihood(p, _n=n, _ybar=ybar, _sc=sc):
                tau, R = p["tau"], p["S"]
                sq = np.sqrt(tau)
                # C = D R D with D = diag(1/sqrt(tau))
                try:
                    cf = cho_factor(R, lower=True)
                except np.linalg.LinAlgError:
                    return -math.inf
                logdet_c = 2.0 * float(np.sum(np.log(np.diag(cf[0])))) - float(np.sum(np.log(tau)))
                d = _ybar - p["mu"]
                m = _sc * np.outer(sq, sq) + _n * np.outer(sq * d, sq * d)
                quad = float(np.trace(cho_solve(cf, m)))
                return -0.5 * (_n * (self.k * math.log(2.0 * math.pi) + logdet_c) + quad)

        observables = {}
        for i, j in pair_order(k):
            observables[f"conc_{i}_{j}"] = ObservableFunctional(
                f"conc_{i}_{j}",
                lambda p, _i=i - 1, _j=j - 1: 0.5 + math.asin(p["S"][_i, _j]) / math.pi,
            )

        return TargetDensity(
            space=space,
            log_prior=log_prior,
            loss_terms=terms,
            log_likelihood=log_likelihood,
            observables=observables,
        )
