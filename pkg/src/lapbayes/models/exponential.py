"""Exponential survival model with expert opinion on median survival.

Three parameterizations of the same model:

- ``median_direct``: sample median survival under a uniform prior; the loss
  alone shapes the posterior, so it reproduces the belief exactly.
- ``rate_with_correction``: sample the rate under a uniform prior and add
  the closed-form correction canceling the density that prior implies on
  median survival; equivalent to ``median_direct`` after change of variables.
- ``rate_uncorrected``: sample the rate with the loss but without the
  correction; the uniform rate prior then attenuates the belief (kept to
  demonstrate exactly that effect).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lapbayes.dists import DistributionSpec
from lapbayes.errors import ConfigurationError
from lapbayes.loss import (
    LOG2,
    ExpertBelief,
    LossTerm,
    ObservableFunctional,
    TargetDensity,
    check_belief_conflict,
    jacobian_correction_exponential_lambda,
)
from lapbayes.space import Block, ParameterSpace

PARAMETERIZATIONS = ("median_direct", "rate_with_correction", "rate_uncorrected")


@dataclass(frozen=True)
class SurvivalData:
    """Right-censored survival times; event flag 1 = observed death."""

    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        e = np.asarray(self.events, dtype=int)
        if t.shape != e.shape or t.ndim != 1:
            raise ConfigurationError("times and events must be matching 1-D arrays")
        if np.any(t <= 0):
            raise ConfigurationError("survival times must be positive")
        if not np.all(np.isin(e, (0, 1))):
            raise ConfigurationError("event flags must be 0 or 1")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "events", e)

    @property
    def n_events(self) -> int:
        return int(self.events.sum())

    @property
    def total_time(self) -> float:
        return float(self.times.sum())


class ExponentialSurvivalModel:
    """lambda = log(2) / t_med links the rate and median-survival scales."""

    def __init__(self, parameterization="median_direct", interval=(0.001, 10.0),
                 prior: DistributionSpec | None = None, data: SurvivalData | None = None):
        if parameterization not in PARAMETERIZATIONS:
            raise ConfigurationError(
                f"unknown parameterization {parameterization!r}; "
                f"expected one of {PARAMETERIZATIONS}"
            )
        a, b = float(interval[0]), float(interval[1])
        if not 0 < a < b:
            raise ConfigurationError("interval must satisfy 0 < a < b")
        if prior is not None and parameterization == "rate_with_correction":
            raise ConfigurationError(
                "rate_with_correction assumes the uniform interval prior; "
                "use median_direct or rate_uncorrected with a custom prior"
            )
        self.parameterization = parameterization
        self.interval = (a, b)
        self.prior = prior
        self.data = data
        self._rate_scale = parameterization != "median_direct"

    # -- construction ----------------------------------------------------------

    @staticmethod
    def from_json(doc: dict, data: SurvivalData | None = None):
        prior = None
        if doc.get("prior") is not None:
            prior = DistributionSpec.from_json(doc["prior"])
        return ExponentialSurvivalModel(
            parameterization=doc.get("parameterization", "median_direct"),
            interval=tuple(doc.get("interval", (0.001, 10.0))),
            prior=prior,
            data=data,
        )

    def to_json(self):
        doc = {
            "family": "exponential",
            "parameterization": self.parameterization,
            "interval": list(self.interval),
        }
        if self.prior is not None:
            doc["prior"] = self.prior.to_json()
        return doc

    # -- target assembly ---------------------------------------------------------

    def _space(self) -> ParameterSpace:
        name = "lam" if self._rate_scale else "t_med"
        if self.prior is not None:
            lo, hi = self.prior.effective_support()
            if lo <= 0 and hi == math.inf:
                return ParameterSpace([Block(name, "positive", 1)])
            return ParameterSpace([Block(name, "interval", 1, lo=max(lo, 1e-12), hi=hi)])
        a, b = self.interval
        return ParameterSpace([Block(name, "interval", 1, lo=a, hi=b)])

    def functionals(self) -> dict[str, ObservableFunctional]:
        if self._rate_scale:
            t_med = ObservableFunctional("t_med", lambda p: LOG2 / p["lam"])
            lam = ObservableFunctional("lam", lambda p: p["lam"])
        else:
            t_med = ObservableFunctional("t_med", lambda p: p["t_med"])
            lam = ObservableFunctional("lam", lambda p: LOG2 / p["t_med"])
        return {"t_med": t_med, "lam": lam}

    def build_target(self, beliefs=()) -> TargetDensity:
        if isinstance(beliefs, ExpertBelief):
            beliefs = [beliefs]
        beliefs = list(beliefs)
        functionals = self.functionals()
        name = "lam" if self._rate_scale else "t_med"
        a, b = self.interval

        if self.prior is not None:
            prior_fn = self.prior.log_pdf_fn()

            def log_prior(p, _f=prior_fn, _n=name):
                return _f(p[_n])
        else:
            const = -math.log(b - a)

            def log_prior(p, _c=const):
                return _c

        terms = []
        correction_pending = self.parameterization == "rate_with_correction"
        for belief in beliefs:
            fn = functionals.get(belief.observable_name)
            if fn is None:
                raise ConfigurationError(
                    f"belief targets unknown observable {belief.observable_name!r}; "
                    f"model exposes {sorted(functionals)}"
                )
            correction = None
            if correction_pending and belief.observable_name == "t_med":
                # the prior-cancellation term enters once, not once per belief
                correction_pending = False

                def correction(p, _a=a, _b=b):
                    # target-side sign: subtract the loss-side correction
                    return -jacobian_correction_exponential_lambda(p["lam"], _a, _b)
            terms.append(LossTerm(fn, belief, correction))
            self._warn_on_conflict(belief, functionals[belief.observable_name])

        log_likelihood = None
        if self.data is not None:
            n_ev, total = self.data.n_events, self.data.total_time
            if self._rate_scale:
                def log_likelihood(p, _n=n_ev, _t=total):
                    lam = p["lam"]
                    return _n * math.log(lam) - lam * _t
            else:
                def log_likelihood(p, _n=n_ev, _t=total):
                    lam = LOG2 / p["t_med"]
                    return _n * math.log(lam) - lam * _t

        return TargetDensity(
            space=self._space(),
            log_prior=log_prior,
            loss_terms=terms,
            log_likelihood=log_likelihood,
            observables=functionals,
        )

    def _warn_on_conflict(self, belief: ExpertBelief, functional: ObservableFunctional):
        rng = np.random.default_rng(0)
        name = "lam" if self._rate_scale else "t_med"
        if self.prior is not None:
            draws = np.array([self.prior.quantile(p) for p in rng.uniform(1e-4, 1 - 1e-4, 1000)])
        else:
            a, b = self.interval
            draws = rng.uniform(a, b, 1000)
        values = np.array([functional({name: d}) for d in draws])
        check_belief_conflict(belief, values, label=f" ({self.parameterization})")


def exponential_gamma_posterior(prior: DistributionSpec, data: SurvivalData) -> DistributionSpec:
    """Closed-form conjugate posterior for the rate under a gamma prior."""
    if prior.family != "gamma":
        raise ConfigurationError("conjugate update needs a gamma prior on the rate")
    return DistributionSpec.gamma(
        prior.params["shape"] + data.n_events,
        prior.params["rate"] + data.total_time,
    )


def dap_density_median_survival(alpha: float, beta: float, t_med: float) -> float:
    """Density of median survival when mean survival is IG(alpha, beta).

    Inverse-gamma density evaluated at t_med/log(2), divided by log(2) for
    the change of variables.
    """
    if alpha <= 0 or beta <= 0:
        raise ConfigurationError("alpha and beta must be positive")
    if t_med <= 0:
        return 0.0
    spec = DistributionSpec.inverse_gamma(alpha, beta)
    return math.exp(spec.log_pdf(t_med / LOG2)) / LOG2
