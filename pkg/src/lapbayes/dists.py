"""Distribution evaluators for expert beliefs and priors.

Eight families share one spec type: lognormal, normal, gamma, inverse-gamma,
lomax, student-t-nonstandard, beta and histogram.  Every family exposes
``log_pdf``, ``cdf`` and ``quantile``; an optional ``support`` narrower than
the family's natural support renormalizes the density to that interval
(hard truncation, -inf log density outside).

Standard families are backed by ``scipy.special`` primitives (gammainc,
betainc, stdtr and their inverses) rather than hand-rolled series; the Lomax
family and the scaled/shifted Student-t are written out explicitly since
their parameterizations are the load-bearing ones here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from lapbayes.errors import DomainError, ParameterDomainError

FAMILIES = (
    "lognormal",
    "normal",
    "gamma",
    "inverse-gamma",
    "lomax",
    "student-t-nonstandard",
    "beta",
    "histogram",
)

_LOG_2PI = math.log(2.0 * math.pi)
_WEIGHT_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Lomax (Pareto type II): CDF 1 - (beta/(x+beta))^alpha
# ---------------------------------------------------------------------------

def _check_lomax_params(alpha, beta):
    if alpha <= 0 or beta <= 0:
        raise ParameterDomainError(
            f"lomax requires shape > 0 and scale > 0, got ({alpha}, {beta})"
        )


def lomax_cdf(x, alpha, beta):
    """CDF of the Lomax distribution, 1 - (beta/(x+beta))^alpha for x >= 0."""
    _check_lomax_params(alpha, beta)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("lomax_cdf requires x >= 0")
    # 1 - (beta/(x+beta))^alpha, via expm1/log1p for accuracy near x = 0
    out = -np.expm1(-alpha * np.log1p(x / beta))
    return out if out.ndim else float(out)


def lomax_log_pdf(x, alpha, beta):
    _check_lomax_params(alpha, beta)
    x = np.asarray(x, dtype=float)
    out = np.where(
        x >= 0,
        math.log(alpha) + alpha * math.log(beta) - (alpha + 1.0) * np.log(x + beta),
        -np.inf,
    )
    return out if out.ndim else float(out)


def lomax_quantile(p, alpha, beta):
    """Closed-form quantile Q(p) = beta * ((1-p)^(-1/alpha) - 1)."""
    _check_lomax_params(alpha, beta)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("quantile requires p in (0, 1)")
    out = beta * np.expm1(-np.log1p(-p) / alpha)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Scaled/shifted Student-t parameterized by (mu, squared scale, df)
# ---------------------------------------------------------------------------

def _check_student_params(mu, scale_sq, df):
    if scale_sq <= 0 or df <= 0:
        raise ParameterDomainError(
            f"student-t requires scale_sq > 0 and df > 0, got ({scale_sq}, {df})"
        )


def student_t_log_pdf(x, mu, scale_sq, df):
    _check_student_params(mu, scale_sq, df)
    s = math.sqrt(scale_sq)
    z = (np.asarray(x, dtype=float) - mu) / s
    out = (
        special.gammaln((df + 1.0) / 2.0)
        - special.gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
        - math.log(s)
        - (df + 1.0) / 2.0 * np.log1p(z * z / df)
    )
    return out if out.ndim else float(out)


def student_t_cdf(x, mu, scale_sq, df):
    _check_student_params(mu, scale_sq, df)
    z = (np.asarray(x, dtype=float) - mu) / math.sqrt(scale_sq)
    out = special.stdtr(df, z)
    return out if np.ndim(out) else float(out)


def student_t_quantile(p, mu, scale_sq, df):
    """Quantile mu + t_df(p) * sqrt(scale_sq)."""
    _check_student_params(mu, scale_sq, df)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("quantile requires p in (0, 1)")
    out = mu + special.stdtrit(df, p) * math.sqrt(scale_sq)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# DistributionSpec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionSpec:
    """A distribution an expert (or a prior) places on a scalar quantity.

    ``params`` is keyed by family-specific names; ``support`` may restrict
    the natural support, in which case the density is renormalized to it.
    """

    family: str
    params: dict = field(default_factory=dict)
    support: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterDomainError(f"unknown family {self.family!r}")
        _VALIDATORS[self.family](self.params)
        lo, hi = self.natural_support()
        if self.support is not None:
            slo, shi = self.support
            if not slo < shi:
                raise ParameterDomainError("support must satisfy lo < hi")
            if slo < lo - 1e-300 or shi > hi + 1e-300:
                # widen is a no-op; clamp to the natural support
                object.__setattr__(self, "support", (max(slo, lo), min(shi, hi)))

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def lognormal(mu, sigma, support=None):
        return DistributionSpec("lognormal", {"mu": mu, "sigma": sigma}, support)

    @staticmethod
    def normal(mu, sigma, support=None):
        return DistributionSpec("normal", {"mu": mu, "sigma": sigma}, support)

    @staticmethod
    def gamma(shape, rate, support=None):
        return DistributionSpec("gamma", {"shape": shape, "rate": rate}, support)

    @staticmethod
    def inverse_gamma(shape, scale, support=None):
        return DistributionSpec("inverse-gamma", {"shape": shape, "scale": scale}, support)

    @staticmethod
    def lomax(shape, scale, support=None):
        return DistributionSpec("lomax", {"shape": shape, "scale": scale}, support)

    @staticmethod
    def student_t(mu, scale_sq, df, support=None):
        return DistributionSpec(
            "student-t-nonstandard", {"mu": mu, "scale_sq": scale_sq, "df": df}, support
        )

    @staticmethod
    def beta(a, b, support=None):
        return DistributionSpec("beta", {"a": a, "b": b}, support)

    @staticmethod
    def histogram(edges, weights):
        return DistributionSpec(
            "histogram", {"edges": tuple(edges), "weights": tuple(weights)}
        )

    # -- evaluation -----------------------------------------------------------

    def natural_support(self):
        return _NATURAL_SUPPORT[self.family](self.params)

    def effective_support(self):
        return self.support if self.support is not None else self.natural_support()

    def _trunc_mass(self):
        if self.support is None:
            return 0.0, 1.0
        lo, hi = self.support
        return _cdf(self.family, self.params, lo), _cdf(self.family, self.params, hi)

    def log_pdf(self, x):
        x = float(x)
        lo, hi = self.effective_support()
        if x < lo or x > hi:
            return -math.inf
        lp = _log_pdf(self.family, self.params, x)
        if self.support is not None:
            c_lo, c_hi = self._trunc_mass()
            lp -= math.log(c_hi - c_lo)
        return lp

    def cdf(self, x):
        x = float(x)
        lo, hi = self.effective_support()
        if x <= lo:
            return 0.0
        if x >= hi:
            return 1.0
        c = _cdf(self.family, self.params, x)
        if self.support is not None:
            c_lo, c_hi = self._trunc_mass()
            c = (c - c_lo) / (c_hi - c_lo)
        return min(max(c, 0.0), 1.0)

    def quantile(self, p):
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile requires p in (0, 1), got {p}")
        if self.support is not None:
            c_lo, c_hi = self._trunc_mass()
            p = c_lo + p * (c_hi - c_lo)
        return _quantile(self.family, self.params, p)

    def mean_sd(self):
        """Mean and standard deviation by 199-point quantile summation.

        Good to ~1% for the well-behaved beliefs used in conflict checks.
        """
        ps = np.linspace(0.0025, 0.9975, 199)
        qs = np.array([self.quantile(p) for p in ps])
        return float(qs.mean()), float(qs.std())

    def log_pdf_fn(self):
        """A specialized scalar log-pdf closure for sampler hot loops."""
        return _make_log_pdf_fn(self)

    # -- JSON -----------------------------------------------------------------

    def to_json(self):
        if self.family == "histogram":
            return {
                "family": "histogram",
                "edges": list(self.params["edges"]),
                "weights": list(self.params["weights"]),
            }
        doc = {"family": self.family, "params": dict(self.params)}
        if self.support is not None:
            doc["support"] = list(self.support)
        return doc

    @staticmethod
    def from_json(doc):
        family = doc["family"]
        if family == "histogram":
            return DistributionSpec.histogram(doc["edges"], doc["weights"])
        support = tuple(doc["support"]) if "support" in doc else None
        return DistributionSpec(family, dict(doc["params"]), support)


def dist_eval(spec: DistributionSpec, x):
    """(log pdf, cdf) of ``spec`` at ``x``; -inf log pdf outside support."""
    return spec.log_pdf(x), spec.cdf(x)


def dist_quantile(spec: DistributionSpec, p):
    """Quantile of ``spec`` at probability ``p`` in (0, 1)."""
    return spec.quantile(p)


# ---------------------------------------------------------------------------
# Per-family internals
# ---------------------------------------------------------------------------

def _require_positive(params, names, family):
    for name in names:
        v = params.get(name)
        if v is None or not np.isfinite(v) or v <= 0:
            raise ParameterDomainError(f"{family} requires {name} > 0, got {v}")


def _validate_lognormal(params):
    _require_positive(params, ("sigma",), "lognormal")
    if not np.isfinite(params.get("mu", np.nan)):
        raise ParameterDomainError("lognormal requires finite mu")


def _validate_normal(params):
    _require_positive(params, ("sigma",), "normal")
    if not np.isfinite(params.get("mu", np.nan)):
        raise ParameterDomainError("normal requires finite mu")


def _validate_gamma(params):
    _require_positive(params, ("shape", "rate"), "gamma")


def _validate_invgamma(params):
    _require_positive(params, ("shape", "scale"), "inverse-gamma")


def _validate_lomax(params):
    _require_positive(params, ("shape", "scale"), "lomax")


def _validate_student(params):
    _require_positive(params, ("scale_sq", "df"), "student-t-nonstandard")
    if not np.isfinite(params.get("mu", np.nan)):
        raise ParameterDomainError("student-t requires finite mu")


def _validate_beta(params):
    _require_positive(params, ("a", "b"), "beta")


def _validate_histogram(params):
    edges = np.asarray(params.get("edges", ()), dtype=float)
    weights = np.asarray(params.get("weights", ()), dtype=float)
    if edges.size < 2 or weights.size != edges.size - 1:
        raise ParameterDomainError("histogram needs n+1 edges for n weights")
    if np.any(np.diff(edges) <= 0):
        raise ParameterDomainError("histogram edges must be strictly increasing")
    if np.any(weights < 0):
        raise ParameterDomainError("histogram weights must be nonnegative")
    if abs(weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
        raise ParameterDomainError(
            f"histogram weights must sum to 1 within {_WEIGHT_SUM_TOL}"
        )


_VALIDATORS = {
    "lognormal": _validate_lognormal,
    "normal": _validate_normal,
    "gamma": _validate_gamma,
    "inverse-gamma": _validate_invgamma,
    "lomax": _validate_lomax,
    "student-t-nonstandard": _validate_student,
    "beta": _validate_beta,
    "histogram": _validate_histogram,
}

_NATURAL_SUPPORT = {
    "lognormal": lambda p: (0.0, math.inf),
    "normal": lambda p: (-math.inf, math.inf),
    "gamma": lambda p: (0.0, math.inf),
    "inverse-gamma": lambda p: (0.0, math.inf),
    "lomax": lambda p: (0.0, math.inf),
    "student-t-nonstandard": lambda p: (-math.inf, math.inf),
    "beta": lambda p: (0.0, 1.0),
    "histogram": lambda p: (p["edges"][0], p["edges"][-1]),
}


def _log_pdf(family, params, x):
    if family == "lognormal":
        mu, sigma = params["mu"], params["sigma"]
        if x <= 0:
            return -math.inf
        z = (math.log(x) - mu) / sigma
        return -math.log(x) - math.log(sigma) - 0.5 * (_LOG_2PI + z * z)
    if family == "normal":
        mu, sigma = params["mu"], params["sigma"]
        z = (x - mu) / sigma
        return -math.log(sigma) - 0.5 * (_LOG_2PI + z * z)
    if family == "gamma":
        a, b = params["shape"], params["rate"]
        if x <= 0:
            return -math.inf
        return a * math.log(b) - special.gammaln(a) + (a - 1.0) * math.log(x) - b * x
    if family == "inverse-gamma":
        a, b = params["shape"], params["scale"]
        if x <= 0:
            return -math.inf
        return a * math.log(b) - special.gammaln(a) - (a + 1.0) * math.log(x) - b / x
    if family == "lomax":
        return lomax_log_pdf(x, params["shape"], params["scale"])
    if family == "student-t-nonstandard":
        return student_t_log_pdf(x, params["mu"], params["scale_sq"], params["df"])
    if family == "beta":
        a, b = params["a"], params["b"]
        if x <= 0 or x >= 1:
            return -math.inf
        return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - special.betaln(a, b)
    if family == "histogram":
        edges = np.asarray(params["edges"], dtype=float)
        weights = np.asarray(params["weights"], dtype=float)
        if x < edges[0] or x > edges[-1]:
            return -math.inf
        i = min(np.searchsorted(edges, x, side="right") - 1, weights.size - 1)
        dens = weights[i] / (edges[i + 1] - edges[i])
        return math.log(dens) if dens > 0 else -math.inf
    raise ParameterDomainError(f"unknown family {family!r}")


def _cdf(family, params, x):
    if family == "lognormal":
        if x <= 0:
            return 0.0
        return float(special.ndtr((math.log(x) - params["mu"]) / params["sigma"]))
    if family == "normal":
        return float(special.ndtr((x - params["mu"]) / params["sigma"]))
    if family == "gamma":
        if x <= 0:
            return 0.0
        return float(special.gammainc(params["shape"], params["rate"] * x))
    if family == "inverse-gamma":
        if x <= 0:
            return 0.0
        return float(special.gammaincc(params["shape"], params["scale"] / x))
    if family == "lomax":
        if x <= 0:
            return 0.0
        return float(lomax_cdf(x, params["shape"], params["scale"]))
    if family == "student-t-nonstandard":
        return float(student_t_cdf(x, params["mu"], params["scale_sq"], params["df"]))
    if family == "beta":
        if x <= 0:
            return 0.0
        if x >= 1:
            return 1.0
        return float(special.betainc(params["a"], params["b"], x))
    if family == "histogram":
        edges = np.asarray(params["edges"], dtype=float)
        weights = np.asarray(params["weights"], dtype=float)
        if x <= edges[0]:
            return 0.0
        if x >= edges[-1]:
            return 1.0
        cum = np.concatenate(([0.0], np.cumsum(weights)))
        i = min(int(np.searchsorted(edges, x, side="right")) - 1, weights.size - 1)
        frac = (x - edges[i]) / (edges[i + 1] - edges[i])
        return float(cum[i] + frac * weights[i])
    raise ParameterDomainError(f"unknown family {family!r}")


def _quantile(family, params, p):
    if family == "lognormal":
        return math.exp(params["mu"] + params["sigma"] * special.ndtri(p))
    if family == "normal":
        return params["mu"] + params["sigma"] * special.ndtri(p)
    if family == "gamma":
        return float(special.gammaincinv(params["shape"], p)) / params["rate"]
    if family == "inverse-gamma":
        return params["scale"] / float(special.gammainccinv(params["shape"], p))
    if family == "lomax":
        return float(lomax_quantile(p, params["shape"], params["scale"]))
    if family == "student-t-nonstandard":
        return float(
            student_t_quantile(p, params["mu"], params["scale_sq"], params["df"])
        )
    if family == "beta":
        return float(special.betaincinv(params["a"], params["b"], p))
    if family == "histogram":
        edges = np.asarray(params["edges"], dtype=float)
        weights = np.asarray(params["weights"], dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(weights)))
        cum[-1] = 1.0
        i = int(np.searchsorted(cum, p, side="right")) - 1
        i = min(max(i, 0), weights.size - 1)
        while weights[i] == 0 and i < weights.size - 1:
            i += 1
        frac = (p - cum[i]) / weights[i] if weights[i] > 0 else 0.0
        return float(edges[i] + frac * (edges[i + 1] - edges[i]))
    raise ParameterDomainError(f"unknown family {family!r}")


def _make_log_pdf_fn(spec: DistributionSpec):
    """Close over precomputed constants; scalar in, scalar out."""
    fam, params = spec.family, spec.params
    lo, hi = spec.effective_support()
    shift = 0.0
    if spec.support is not None:
        c_lo, c_hi = spec._trunc_mass()
        shift = math.log(c_hi - c_lo)

    if fam == "lognormal":
        mu, sigma = params["mu"], params["sigma"]
        c = -math.log(sigma) - 0.5 * _LOG_2PI - shift

        def fn(x):
            if x <= 0 or x < lo or x > hi:
                return -math.inf
            lx = math.log(x)
            z = (lx - mu) / sigma
            return c - lx - 0.5 * z * z

        return fn
    if fam == "normal":
        mu, sigma = params["mu"], params["sigma"]
        c = -math.log(sigma) - 0.5 * _LOG_2PI - shift

        def fn(x):
            if x < lo or x > hi:
                return -math.inf
            z = (x - mu) / sigma
            return c - 0.5 * z * z

        return fn
    if fam == "student-t-nonstandard":
        mu, df = params["mu"], params["df"]
        s = math.sqrt(params["scale_sq"])
        c = (
            float(special.gammaln((df + 1.0) / 2.0) - special.gammaln(df / 2.0))
            - 0.5 * math.log(df * math.pi)
            - math.log(s)
            - shift
        )
        h = (df + 1.0) / 2.0

        def fn(x):
            if x < lo or x > hi:
                return -math.inf
            z = (x - mu) / s
            return c - h * math.log1p(z * z / df)

        return fn

    def fn(x):  # remaining families: generic dispatch is fast enough
        return spec.log_pdf(x)

    return fn
