"""Deterministic elicitation arithmetic.

Converts expert answers (tertiles, survival probabilities, prior-predictive
quantiles, concordance probabilities, pseudo sample sizes) into
hyperparameters, feasibility feedback and effective-sample-size estimates.
All solvers are pure functions; root finding uses bracketed methods so the
same inputs always give the same outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from lapbayes.corrmats import (
    correlation_to_concordance,
    smallest_eigenvalue,
)
from lapbayes.dists import DistributionSpec
from lapbayes.errors import (
    DomainError,
    GlobalIncoherenceError,
    InconsistentAnswersError,
    InfeasibleError,
    ParameterDomainError,
)

LOG2 = math.log(2.0)

#: Smallest feasible Q(2/3)/Q(1/3) ratio for a Lomax prior predictive,
#: attained in the limit of infinite effective sample size.
LOMAX_TERTILE_RATIO_BOUND = math.log(3.0) / math.log(1.5)


# ---------------------------------------------------------------------------
# Answer types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TertileAnswer:
    """Times Q(1/3) and Q(2/3) splitting a lifetime into equal thirds."""

    q13: float
    q23: float

    def __post_init__(self):
        if self.q13 <= 0 or self.q23 <= 0:
            raise ParameterDomainError("tertile times must be positive")
        if self.q23 <= self.q13:
            raise ParameterDomainError(
                f"Q(2/3)={self.q23} must exceed Q(1/3)={self.q13}"
            )


@dataclass(frozen=True)
class SurvivalProbAnswer:
    """Probability tau that survival at time t exceeds fraction gamma."""

    t: float
    gamma: float
    tau: float
    alpha: float | None = None  # fixed prior ESS, one-answer mode

    def __post_init__(self):
        if self.t <= 0:
            raise ParameterDomainError("timepoint must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ParameterDomainError("survival fraction must be in (0, 1)")
        if not 0.0 < self.tau < 1.0:
            raise ParameterDomainError("tau must be in (0, 1)")
        if self.alpha is not None and self.alpha <= 0:
            raise ParameterDomainError("fixed alpha must be positive")


@dataclass(frozen=True)
class NormalGammaHyper:
    """Hyperparameters of the NormalGamma prior on one (mean, precision)."""

    mu0: float
    gamma_ng: float
    alpha_ng: float
    beta_ng: float

    def __post_init__(self):
        if min(self.gamma_ng, self.alpha_ng, self.beta_ng) <= 0:
            raise ParameterDomainError("NormalGamma needs gamma, alpha, beta > 0")

    def prior_predictive(self) -> DistributionSpec:
        """Scaled/shifted Student-t of one future observation."""
        scale_sq = self.beta_ng * (self.gamma_ng + 1.0) / (self.alpha_ng * self.gamma_ng)
        return DistributionSpec.student_t(self.mu0, scale_sq, 2.0 * self.alpha_ng)

    def to_json(self):
        return {
            "mu0": self.mu0,
            "gamma": self.gamma_ng,
            "alpha": self.alpha_ng,
            "beta": self.beta_ng,
        }


@dataclass(frozen=True)
class CoherencyReport:
    """Feasible range of one correlation with all the others held fixed."""

    pair: tuple[int, int]  # 1-based component indices, i < j
    elicited_r: float
    lo: float
    hi: float
    in_interval: bool
    concordance_lo: float
    concordance_hi: float
    elicited_concordance: float

    def to_json(self):
        return {
            "pair": list(self.pair),
            "elicited_r": self.elicited_r,
            "interval": [self.lo, self.hi],
            "in_interval": self.in_interval,
            "concordance_interval": [self.concordance_lo, self.concordance_hi],
            "elicited_concordance": self.elicited_concordance,
        }


# ---------------------------------------------------------------------------
# Lomax prior predictive (exponential sampling, gamma prior)
# ---------------------------------------------------------------------------

def _lomax_ratio(inv_alpha: float) -> float:
    # Q(2/3)/Q(1/3) as a function of 1/alpha; increasing, -> bound as x -> 0
    return math.expm1(math.log(3.0) * inv_alpha) / math.expm1(math.log(1.5) * inv_alpha)


def solve_lomax_tertiles(ans: TertileAnswer) -> tuple[float, float]:
    """(alpha, beta) with Lomax CDF hitting 1/3 and 2/3 at the given times.

    Infeasible when Q(2/3)/Q(1/3) <= ln 3 / ln 1.5: no gamma prior, however
    diffuse, spreads the tertiles further apart than that.
    """
    ratio = ans.q23 / ans.q13
    if ratio <= LOMAX_TERTILE_RATIO_BOUND:
        raise InfeasibleError(
            f"tertile ratio {ratio:.6f} is at or below the Lomax bound "
            f"ln3/ln1.5 = {LOMAX_TERTILE_RATIO_BOUND:.6f}; no solution exists"
        )
    x_hi = 1.0
    while _lomax_ratio(x_hi) < ratio:
        x_hi *= 2.0
        if x_hi > 1e9:  # pragma: no cover - ratio > bound guarantees a bracket
            raise InfeasibleError("failed to bracket the Lomax shape solve")
    inv_alpha = optimize.brentq(
        lambda x: _lomax_ratio(x) - ratio, 1e-13, x_hi, xtol=1e-15, rtol=8.9e-16
    )
    alpha = 1.0 / inv_alpha
    beta = ans.q13 / math.expm1(math.log(1.5) * inv_alpha)
    return alpha, beta


def ess_to_tertiles(alpha: float, median: float) -> TertileAnswer:
    """Tertiles implied by a Lomax with the given shape (ESS) and median."""
    if alpha <= 0 or median <= 0:
        raise ParameterDomainError("alpha and median must be positive")
    beta = median / math.expm1(LOG2 / alpha)
    return TertileAnswer(
        q13=beta * math.expm1(math.log(1.5) / alpha),
        q23=beta * math.expm1(math.log(3.0) / alpha),
    )


# ---------------------------------------------------------------------------
# Inverse-gamma data augmentation prior (DAP)
# ---------------------------------------------------------------------------

def dap_survival_prob(alpha: float, ytilde: float, t: float, gamma: float) -> float:
    """Pr(exp(-t/psi) > gamma) under psi ~ IG(alpha, alpha*ytilde)."""
    if alpha <= 0 or ytilde <= 0 or t <= 0:
        raise ParameterDomainError("alpha, ytilde and t must be positive")
    if not 0.0 < gamma < 1.0:
        raise ParameterDomainError("gamma must be in (0, 1)")
    threshold = -alpha * ytilde * math.log(gamma) / t
    return float(special.gammainc(alpha, threshold))


def _dap_ytilde_given_alpha(ans: SurvivalProbAnswer, alpha: float) -> float:
    q = float(special.gammaincinv(alpha, ans.tau))
    return ans.t * q / (alpha * (-math.log(ans.gamma)))


def solve_dap(answers) -> tuple[float, float]:
    """(alpha, ytilde) reproducing the elicited survival probabilities.

    One answer with a fixed alpha inverts in closed form; two answers
    eliminate ytilde and leave a bracketed one-dimensional solve in alpha.
    """
    answers = list(answers)
    if len(answers) == 1:
        ans = answers[0]
        if ans.alpha is None:
            raise ParameterDomainError(
                "a single answer needs a fixed alpha (the prior ESS)"
            )
        return ans.alpha, _dap_ytilde_given_alpha(ans, ans.alpha)
    if len(answers) != 2:
        raise ParameterDomainError("solve_dap takes one or two answers")
    a1, a2 = answers
    if a1.gamma == a2.gamma and (a2.t - a1.t) * (a2.tau - a1.tau) > 0:
        raise InconsistentAnswersError(
            "tau must decrease with time at a fixed survival fraction",
            residuals=None,
        )

    def gap(log_alpha: float) -> float:
        alpha = math.exp(log_alpha)
        return _dap_ytilde_given_alpha(a1, alpha) - _dap_ytilde_given_alpha(a2, alpha)

    grid = np.linspace(math.log(1e-2), math.log(1e7), 241)
    vals = np.array([gap(g) for g in grid])
    crossings = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    if crossings.size == 0 and exact.size == 0:
        resid = [
            (float(min(np.abs(vals))), "min |ytilde gap| over the alpha grid"),
        ]
        raise InconsistentAnswersError(
            "the two answers admit no common (alpha, ytilde) with alpha > 0",
            residuals=resid,
        )
    if crossings.size > 0:
        i = int(crossings[0])
        log_alpha = optimize.brentq(gap, grid[i], grid[i + 1], xtol=1e-14)
    else:
        log_alpha = float(grid[exact[0]])
    alpha = math.exp(log_alpha)
    ytilde = _dap_ytilde_given_alpha(a1, alpha)
    for ans in answers:
        back = dap_survival_prob(alpha, ytilde, ans.t, ans.gamma)
        if abs(back - ans.tau) > 1e-6:
            raise InconsistentAnswersError(
                "solved parameters fail to reproduce an elicited tau",
                residuals=[(ans.tau, back)],
            )
    return alpha, ytilde


def dap_median_survival_quantile(alpha: float, ytilde: float, p: float) -> float:
    """Quantile of median survival log(2)*psi under psi ~ IG(alpha, alpha*ytilde)."""
    if alpha <= 0 or ytilde <= 0:
        raise ParameterDomainError("alpha and ytilde must be positive")
    if not 0.0 < p < 1.0:
        raise DomainError("p must be in (0, 1)")
    return LOG2 * alpha * ytilde / float(special.gammaincinv(alpha, 1.0 - p))


def lognormal_from_ig_median_survival(alpha: float, ytilde: float) -> tuple[float, float]:
    """Moment-matched lognormal (mu, sigma) for the DAP median survival."""
    if alpha <= 2.0:
        raise ParameterDomainError(
            f"moment matching needs alpha > 2 for a finite variance, got {alpha}"
        )
    if ytilde <= 0:
        raise ParameterDomainError("ytilde must be positive")
    m = LOG2 * alpha * ytilde / (alpha - 1.0)
    v = LOG2**2 * (alpha * ytilde) ** 2 / ((alpha - 1.0) ** 2 * (alpha - 2.0))
    sigma_sq = math.log1p(v / (m * m))
    mu = math.log(m) - sigma_sq / 2.0
    return mu, math.sqrt(sigma_sq)


# ---------------------------------------------------------------------------
# NormalGamma hyperparameters from prior-predictive quantiles
# ---------------------------------------------------------------------------

def fit_student_t_hyperparams(q50: float, q75: float, n_e: float) -> NormalGammaHyper:
    """NormalGamma hypers whose Student-t prior predictive hits (q50, q75).

    By symmetry mu0 = q50; gamma = n_e and alpha = n_e/2 encode the pseudo
    observation counts; beta is solved from the 0.75 quantile in closed form.
    """
    if n_e <= 0:
        raise ParameterDomainError("n_e must be positive")
    if q75 <= q50:
        raise ParameterDomainError(f"q75={q75} must exceed q50={q50}")
    gamma_ng = float(n_e)
    alpha_ng = n_e / 2.0
    df = 2.0 * alpha_ng
    t75 = float(special.stdtrit(df, 0.75))
    scale = (q75 - q50) / t75
    beta_ng = scale * scale * alpha_ng * gamma_ng / (gamma_ng + 1.0)
    return NormalGammaHyper(float(q50), gamma_ng, alpha_ng, beta_ng)


# ---------------------------------------------------------------------------
# Coherency intervals for elicited correlations
# ---------------------------------------------------------------------------

def _lambda_min_at(R: np.ndarray, i: int, j: int, r: float) -> float:
    M = R.copy()
    M[i, j] = M[j, i] = r
    return smallest_eigenvalue(M)


def _bisect_root(f, outside: float, inside: float) -> float:
    # crossing of f between an infeasible point (f <= 0) and a feasible one
    for _ in range(60):
        mid = 0.5 * (outside + inside)
        if f(mid) > 0:
            inside = mid
        else:
            outside = mid
    return 0.5 * (outside + inside)


def coherency_intervals(R, pairs=None) -> list[CoherencyReport]:
    """Feasible open interval for each correlation, the others held fixed.

    The set of values keeping the matrix positive definite along one entry
    is an interval (the PD cone is convex); endpoints are located by
    bisection on the smallest eigenvalue.
    """
    R = np.asarray(R, dtype=float)
    k = R.shape[0]
    if R.ndim != 2 or R.shape[1] != k or k < 2:
        raise ParameterDomainError("expected a square matrix with k >= 2")
    if not np.allclose(R, R.T, atol=1e-10) or not np.allclose(np.diag(R), 1.0):
        raise ParameterDomainError("expected a symmetric matrix with unit diagonal")
    off = R[~np.eye(k, dtype=bool)]
    if np.any(np.abs(off) >= 1.0):
        raise ParameterDomainError("elicited correlations must satisfy |r| < 1")
    if pairs is None:
        pairs = [(b + 1, a + 1) for a in range(1, k) for b in range(a)]

    reports = []
    for i1, j1 in pairs:
        i, j = i1 - 1, j1 - 1
        if not (0 <= i < k and 0 <= j < k and i != j):
            raise ParameterDomainError(f"invalid pair {(i1, j1)} for k={k}")

        def lam(r, i=i, j=j):
            return _lambda_min_at(R, i, j, r)

        grid = np.linspace(-1.0, 1.0, 201)
        vals = np.array([lam(r) for r in grid])
        best = int(np.argmax(vals))
        # golden-ish refinement of the concave maximum
        lo_b = grid[max(best - 1, 0)]
        hi_b = grid[min(best + 1, grid.size - 1)]
        for _ in range(40):
            m1 = lo_b + (hi_b - lo_b) * 0.382
            m2 = lo_b + (hi_b - lo_b) * 0.618
            if lam(m1) < lam(m2):
                lo_b = m1
            else:
                hi_b = m2
        r_star = 0.5 * (lo_b + hi_b)
        f_star = lam(r_star)
        if f_star <= 0:
            minors = []
            for drop, label in ((i, i1), (j, j1)):
                keep = [a for a in range(k) if a != drop]
                sub = R[np.ix_(keep, keep)]
                if smallest_eigenvalue(sub) <= 0:
                    minors.append(f"principal submatrix without component {label}")
            raise GlobalIncoherenceError(
                f"no value of r[{i1},{j1}] yields a positive definite matrix; "
                "the fixed correlations are jointly incoherent",
                minors=minors or ["joint constraint infeasible despite PD submatrices"],
            )
        lo = _bisect_root(lam, -1.0, r_star)
        hi = _bisect_root(lam, 1.0, r_star)
        r_elic = float(R[i, j])
        reports.append(
            CoherencyReport(
                pair=(min(i1, j1), max(i1, j1)),
                elicited_r=r_elic,
                lo=float(lo),
                hi=float(hi),
                in_interval=bool(lo < r_elic < hi),
                concordance_lo=correlation_to_concordance(max(lo, -1 + 1e-12)),
                concordance_hi=correlation_to_concordance(min(hi, 1 - 1e-12)),
                elicited_concordance=correlation_to_concordance(r_elic),
            )
        )
    return reports


# ---------------------------------------------------------------------------
# ESS estimation
# ---------------------------------------------------------------------------

def estimate_ess_gamma(pairs) -> tuple[float, float, float]:
    """(shape, rate, residual) of a gamma fitted to posterior quantile pairs.

    ``pairs`` is a sequence of (probability, value); the shape doubles as
    the prior effective sample size for an exponential likelihood.  The fit
    minimizes unweighted squared error on the quantile scale, profiling the
    scale out in closed form.
    """
    pts = sorted((float(p), float(q)) for p, q in pairs)
    if len(pts) < 2:
        raise ParameterDomainError("need at least two (p, value) pairs")
    probs = np.array([p for p, _ in pts])
    qs = np.array([q for _, q in pts])
    if np.any(qs <= 0):
        raise ParameterDomainError("quantile values must be positive")
    if np.any(np.diff(probs) <= 0) or np.any(np.diff(qs) <= 0):
        raise ParameterDomainError(
            "pairs must be strictly increasing in both probability and value"
        )

    def objective(log_shape: float) -> float:
        shape = math.exp(log_shape)
        g = special.gammaincinv(shape, probs)
        denom = float(g @ g)
        if denom == 0:
            return float(qs @ qs)
        scale = float(g @ qs) / denom
        resid = scale * g - qs
        return float(resid @ resid)

    grid = np.linspace(math.log(1e-3), math.log(1e7), 201)
    vals = np.array([objective(g) for g in grid])
    best = int(np.argmin(vals))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    for _ in range(80):
        m1 = lo + (hi - lo) * 0.382
        m2 = lo + (hi - lo) * 0.618
        if objective(m1) < objective(m2):
            hi = m2
        else:
            lo = m1
    log_shape = 0.5 * (lo + hi)
    shape = math.exp(log_shape)
    g = special.gammaincinv(shape, probs)
    scale = float(g @ qs) / float(g @ g)
    residual = objective(log_shape)
    return shape, 1.0 / scale, residual


def regression_ess_heuristic(sd_post_data: float, n_data: float, sd_expert: float) -> float:
    """n_expert = n_data * (sd_post_data / sd_expert)^2."""
    if min(sd_post_data, n_data, sd_expert) <= 0:
        raise ParameterDomainError("all inputs must be positive")
    return n_data * (sd_post_data / sd_expert) ** 2


def elicitation_count(k: int) -> int:
    """Number of elicited quantities for the k-dimensional MVN protocol."""
    if k < 2:
        raise ParameterDomainError("k must be >= 2")
    return k * (k - 1) // 2 + 2 * k + 1
