"""Matrix-factorization collaborative filtering with Levy-flight simulated annealing."""

from .als import AlsConfig, SingularSystemError, als_solve_side, als_train
from .anneal import (
    AnnealConfig,
    ExponentialCooling,
    LinearCooling,
    accept,
    anneal,
    cool,
    propose,
)
from .core import (
    BiasedFactorModel,
    FactorModel,
    RatingDataset,
    RatingTriple,
    SolverReport,
    clamp_ratings,
    init_model,
    predict,
    predict_biased,
)
from .estimators import ALSFactorizer, AnnealingFactorizer, BiasedSGDFactorizer, WeightedNMF
from .evaluation import Split, baseline_rmse, rmse, split_holdout
from .sampling import GaussianWalk, LevyParams, LevyWalk, gaussian_step, levy_step, sigma_u
from .sgd import DivergenceError, SgdConfig, sgd_step, sgd_train
from .wnmf import WnmfConfig, wnmf_train, wnmf_update

__version__ = "0.1.0"

__all__ = [
    "ALSFactorizer",
    "AlsConfig",
    "AnnealConfig",
    "AnnealingFactorizer",
    "BiasedFactorModel",
    "BiasedSGDFactorizer",
    "DivergenceError",
    "ExponentialCooling",
    "FactorModel",
    "GaussianWalk",
    "LevyParams",
    "LevyWalk",
    "LinearCooling",
    "RatingDataset",
    "RatingTriple",
    "SgdConfig",
    "SingularSystemError",
    "SolverReport",
    "Split",
    "WeightedNMF",
    "WnmfConfig",
    "accept",
    "als_solve_side",
    "als_train",
    "anneal",
    "baseline_rmse",
    "clamp_ratings",
    "cool",
    "gaussian_step",
    "init_model",
    "levy_step",
    "predict",
    "predict_biased",
    "propose",
    "rmse",
    "sgd_step",
    "sgd_train",
    "sigma_u",
    "split_holdout",
    "wnmf_train",
    "wnmf_update",
]
