"""Population-based approximate Bayesian computation.

Likelihood-free samplers sharing one model contract: plain rejection, an
adaptive sequential sampler with mixture-proposal importance weights and
automatic Gaussian kernel scaling, the prior-ratio (PRC) baseline it
corrects, and likelihood-free MCMC — plus diagnostics, benchmark models
with analytic reference posteriors, and a deterministic parallel engine.
"""
from .diagnostics import (
    GenerationStats,
    OracleComparison,
    PosteriorOracle,
    compare_to_oracle,
    ess,
    generation_stats,
    ks_two_sample,
    weighted_quantile,
)
from .errors import BudgetExhausted, ConfigError, DegeneratePopulation
from .kernel import KernelScale, adapt_scale, kernel_logdensity, perturb, weighted_moments
from .models import (
    IndependentNormalPrior,
    ModelSpec,
    UniformBoxPrior,
    distance,
)
from .samplers import (
    AutoSchedule,
    MCMCResult,
    Particle,
    Population,
    ToleranceSchedule,
    abc_mcmc,
    abc_pmc,
    abc_prc,
    abc_rejection,
    pmc_log_weights,
    prc_log_weights,
    resample_index,
)

__version__ = "0.1.0"

__all__ = [
    "AutoSchedule",
    "BudgetExhausted",
    "ConfigError",
    "DegeneratePopulation",
    "GenerationStats",
    "IndependentNormalPrior",
    "KernelScale",
    "MCMCResult",
    "ModelSpec",
    "OracleComparison",
    "Particle",
    "Population",
    "PosteriorOracle",
    "ToleranceSchedule",
    "UniformBoxPrior",
    "abc_mcmc",
    "abc_pmc",
    "abc_prc",
    "abc_rejection",
    "adapt_scale",
    "compare_to_oracle",
    "distance",
    "ess",
    "generation_stats",
    "kernel_logdensity",
    "ks_two_sample",
    "perturb",
    "pmc_log_weights",
    "prc_log_weights",
    "resample_index",
    "weighted_moments",
    "weighted_quantile",
]
