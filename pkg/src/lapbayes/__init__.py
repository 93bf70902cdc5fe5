"""Loss-adjusted posteriors: encode expert opinion on observable quantities
into Bayesian posteriors through exponentiated loss functions.

The package bundles the elicitation arithmetic (quantile and probability
answers to hyperparameters), the loss/target assembly machinery, an adaptive
random-walk Metropolis sampler with diagnostics, three reference model
families (exponential survival, multivariate normal, repeated-measures
regression), a JSON-over-HTTP session service and a CLI.
"""

__version__ = "0.1.0"

from lapbayes.dists import DistributionSpec, dist_eval, dist_quantile
from lapbayes.loss import ExpertBelief, LossTerm, ObservableFunctional, TargetDensity
from lapbayes.sampler import SampleBatch, SamplerConfig, run_chains
from lapbayes.space import ParameterSpace

__all__ = [
    "DistributionSpec",
    "dist_eval",
    "dist_quantile",
    "ExpertBelief",
    "LossTerm",
    "ObservableFunctional",
    "TargetDensity",
    "ParameterSpace",
    "SamplerConfig",
    "SampleBatch",
    "run_chains",
    "__version__",
]
