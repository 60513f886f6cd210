"""Stochastic downlink analysis of WiGig / NR-U coexistence in the 60 GHz band."""

__version__ = "0.1.0"

from coexsim.scenario import ConfigError, ScenarioConfig, generate_deployment, validate_config
from coexsim.engine import SampleSet, evaluate_drop, run_monte_carlo, shannon_rate, sinr
from coexsim.stats import FitConfig, GaussianMixture, fit_gmm, histogram, summarize

__all__ = [
    "ConfigError",
    "FitConfig",
    "GaussianMixture",
    "SampleSet",
    "ScenarioConfig",
    "evaluate_drop",
    "fit_gmm",
    "generate_deployment",
    "histogram",
    "run_monte_carlo",
    "shannon_rate",
    "sinr",
    "summarize",
    "validate_config",
]
