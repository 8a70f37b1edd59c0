"""Nonparametric learning of continuous pairwise Markov random fields.

The library estimates a pairwise MRF with continuous variables on a
finite interval from i.i.d. samples: basis-function sample moments give
the belief expansions in closed form, the energy is assembled from
their logarithms, and the result can be validated (grid LBP, exact
chain marginals), scored (likelihood, KLD, AIC), and model-selected
over the truncation order.
"""

__version__ = "0.1.0"

from .core import Graph, Dataset, build_chain, build_grid, load_dataset, save_dataset
from .basis import (
    BasisSystem,
    QuadratureRule,
    make_basis,
    make_quadrature,
    transform_interval,
    legendre_explicit,
)
from .learn import (
    MomentSet,
    LearnedModel,
    CoefficientSet,
    compute_moments,
    fit,
    recover_coefficients,
    energy_from_coefficients,
    bethe_free_energy,
    save_model,
    load_model,
)
from .infer import (
    DiscretizedField,
    LbpState,
    discretize,
    lbp_solve,
    lbp_beliefs,
    chain_marginals_exact,
)
from .sample import (
    EnergyModel,
    CallableEnergy,
    PairwiseEnergyModel,
    GenerativeEnergy,
    SamplerConfig,
    generative_energy,
    acceptance_ratio,
    mh_sample,
)
from .evaluate import (
    Score,
    mc_log_partition,
    log_likelihood,
    kld_estimate,
    aic,
    parameter_count,
    score_model,
)
from .cli import ExperimentConfig, load_config, run_sweep, fit_once

__all__ = [
    "Graph", "Dataset", "build_chain", "build_grid", "load_dataset", "save_dataset",
    "BasisSystem", "QuadratureRule", "make_basis", "make_quadrature",
    "transform_interval", "legendre_explicit",
    "MomentSet", "LearnedModel", "CoefficientSet", "compute_moments", "fit",
    "recover_coefficients", "energy_from_coefficients", "bethe_free_energy",
    "save_model", "load_model",
    "DiscretizedField", "LbpState", "discretize", "lbp_solve", "lbp_beliefs",
    "chain_marginals_exact",
    "EnergyModel", "CallableEnergy", "PairwiseEnergyModel", "GenerativeEnergy",
    "SamplerConfig", "generative_energy", "acceptance_ratio", "mh_sample",
    "Score", "mc_log_partition", "log_likelihood", "kld_estimate", "aic",
    "parameter_count", "score_model",
    "ExperimentConfig", "load_config", "run_sweep", "fit_once",
]
