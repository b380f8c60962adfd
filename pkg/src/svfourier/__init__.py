"""Bayesian calibration of stochastic volatility models from high-frequency prices.

The latent variance path is reconstructed with a Fejer-weighted Fourier
estimator; given it, price increments are conditionally Gaussian and the
model parameters are sampled with adaptive Metropolis.
"""

from .inference import PriorSpec, sample_posterior, summarize
from .likelihood import LikelihoodContext, log_likelihood, standardized_residuals
from .models import Theta, get_model, make_expou, make_heston
from .simulate import PathSample, SimConfig, simulate
from .spotvol import EstimatorConfig, estimate_spot_vol

__version__ = "0.1.0"

__all__ = [
    "EstimatorConfig",
    "LikelihoodContext",
    "PathSample",
    "PriorSpec",
    "SimConfig",
    "Theta",
    "estimate_spot_vol",
    "get_model",
    "log_likelihood",
    "make_expou",
    "make_heston",
    "sample_posterior",
    "simulate",
    "standardized_residuals",
    "summarize",
]
