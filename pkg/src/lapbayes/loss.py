"""Loss-framework: expert beliefs on observables and target-density assembly.

A target's log density is

    log prior + log likelihood (if data) + sum of loss contributions
    + sum of flattening terms + constraint-transform log-Jacobians,

where each loss contribution is the log density of an expert's belief
evaluated at the observable the parameters imply, plus an optional
closed-form correction canceling what the prior itself says about that
observable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from lapbayes.dists import DistributionSpec
from lapbayes.errors import ConfigurationError
from lapbayes.space import ParameterSpace

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ExpertBelief:
    """A distribution an expert places on a named observable quantity."""

    observable_name: str
    spec: DistributionSpec
    description: str = ""

    def to_json(self):
        doc = {"observable": self.observable_name}
        doc.update(self.spec.to_json())
        if self.description:
            doc["description"] = self.description
        return doc

    @staticmethod
    def from_json(doc):
        spec = DistributionSpec.from_json(doc)
        return ExpertBelief(doc["observable"], spec, doc.get("description", ""))


@dataclass(frozen=True)
class ObservableFunctional:
    """Deterministic map from constrained parameter values to a scalar."""

    name: str
    fn: object  # callable(params dict) -> float

    def __call__(self, params: dict) -> float:
        return float(self.fn(params))


class LossTerm:
    """One belief attached to one observable functional.

    ``correction`` (optional, callable on params) is added to the log-target
    contribution; it carries closed-form Jacobian corrections such as the
    rate-parameterization term of the exponential model.
    """

    def __init__(self, functional: ObservableFunctional, belief: ExpertBelief,
                 correction=None):
        self.functional = functional
        self.belief = belief
        self.correction = correction
        self._log_pdf = belief.spec.log_pdf_fn()

    def log_target_contribution(self, params: dict) -> float:
        value = self.functional(params)
        out = self._log_pdf(value)
        if self.correction is not None:
            out += self.correction(params)
        return out


class TargetDensity:
    """Composable unnormalized log posterior over a ParameterSpace.

    Pure and reentrant: safe to evaluate from parallel chains.
    """

    def __init__(self, space: ParameterSpace, log_prior, loss_terms=(),
                 log_likelihood=None, flattening_terms=(), observables=None):
        self.space = space
        self.log_prior = log_prior
        self.loss_terms = tuple(loss_terms)
        self.log_likelihood = log_likelihood
        self.flattening_terms = tuple(flattening_terms)
        self.observables: dict[str, ObservableFunctional] = dict(observables or {})

    def log_density_params(self, params: dict) -> float:
        """Log target over the constrained coordinates (no transform Jacobian)."""
        lp = float(self.log_prior(params))
        if not np.isfinite(lp):
            return -math.inf
        if self.log_likelihood is not None:
            lp += float(self.log_likelihood(params))
            if not np.isfinite(lp):
                return -math.inf
        for term in self.loss_terms:
            lp += term.log_target_contribution(params)
            if not np.isfinite(lp):
                return -math.inf
        for term in self.flattening_terms:
            lp += float(term(params))
            if not np.isfinite(lp):
                return -math.inf
        return lp

    def log_density(self, u: np.ndarray) -> float:
        """Log target over the unconstrained vector, Jacobians included."""
        params, log_jac = self.space.constrain(u)
        lp = self.log_density_params(params)
        if not np.isfinite(lp):
            return -math.inf
        return lp + log_jac

    def observable_values(self, params: dict) -> dict[str, float]:
        return {name: fn(params) for name, fn in self.observables.items()}


def jacobian_correction_exponential_lambda(lam: float, a: float, b: float) -> float:
    """Loss-side correction log(lambda^2 / ((b - a) log 2)).

    Added to the negative-log-belief loss under a uniform (a, b) prior on the
    rate, it cancels the density that prior implies on median survival, so
    the posterior median survival reproduces the belief exactly.  Returns
    -inf outside (a, b), where the prior carries no mass anyway.
    """
    if not a < lam < b:
        return -math.inf
    return math.log(lam * lam / ((b - a) * LOG2))


def check_belief_conflict(belief: ExpertBelief, functional_values: np.ndarray,
                          label: str = "") -> bool:
    """Warn when a belief's central 99% interval misses the functional's range.

    ``functional_values`` should be observable values under ~1,000 prior
    draws.  Returns True when a conflict warning was issued.
    """
    lo, hi = belief.spec.quantile(0.005), belief.spec.quantile(0.995)
    vmin, vmax = float(np.min(functional_values)), float(np.max(functional_values))
    if vmax < lo or vmin > hi:
        warnings.warn(
            f"belief on {belief.observable_name!r}{label} has 99% interval "
            f"[{lo:.4g}, {hi:.4g}] disjoint from the prior range of the "
            f"observable [{vmin:.4g}, {vmax:.4g}]; the loss-adjusted posterior "
            "and any effective-sample-size readout may be misleading",
            stacklevel=2,
        )
        return True
    return False


def build_loss_terms(functionals: dict[str, ObservableFunctional],
                     beliefs, corrections=None) -> list[LossTerm]:
    """Resolve beliefs against a model's functionals by observable name.

    Multiple beliefs on one observable are allowed; their log densities sum.
    """
    corrections = corrections or {}
    terms = []
    for belief in beliefs:
        fn = functionals.get(belief.observable_name)
        if fn is None:
            raise ConfigurationError(
                f"belief targets unknown observable {belief.observable_name!r}; "
                f"model exposes {sorted(functionals)}"
            )
        terms.append(LossTerm(fn, belief, corrections.get(belief.observable_name)))
    return terms
