"""Rank-based estimation of the dependence functions phi and kappa.

The submodules are:

``ranks``       datasets, tie rules, ranks and exact nearest neighbours
``estimator``   normalized rank gaps and the phi/kappa plug-in estimators
``copulas``     copula families, joint and Markov-product samplers
``reference``   closed-form, quadrature and Monte Carlo reference curves
``study``       reproducible convergence studies
``analysis``    one-call analysis of a dataset
``dataio``      CSV/JSON input and output, study configuration files
``cli``         the ``markovdep`` command
"""

from .analysis import AnalysisReport, analyze
from .copulas import (
    LSL,
    Comonotone,
    DiagonalSpec,
    Frechet,
    GaussianEqui,
    Independence,
    Jump,
    MarshallOlkin,
    sample_joint,
    sample_markov_product,
)
from .errors import ConfigError, DataIOError, DomainError, InputError, MarkovDepError, NumericError
from .estimator import (
    DependenceCurve,
    estimate_gaps,
    identity_check,
    kappa_curve,
    kappa_hat,
    phi_curve,
    phi_hat,
    xi_hat,
)
from .ranks import Dataset, TieRule, make_rank_pairs
from .reference import reference_curve
from .study import StudyConfig, StudyResult, run_study

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "analyze",
    "LSL",
    "Comonotone",
    "DiagonalSpec",
    "Frechet",
    "GaussianEqui",
    "Independence",
    "Jump",
    "MarshallOlkin",
    "sample_joint",
    "sample_markov_product",
    "ConfigError",
    "DataIOError",
    "DomainError",
    "InputError",
    "MarkovDepError",
    "NumericError",
    "DependenceCurve",
    "estimate_gaps",
    "identity_check",
    "kappa_curve",
    "kappa_hat",
    "phi_curve",
    "phi_hat",
    "xi_hat",
    "Dataset",
    "TieRule",
    "make_rank_pairs",
    "reference_curve",
    "StudyConfig",
    "StudyResult",
    "run_study",
]
