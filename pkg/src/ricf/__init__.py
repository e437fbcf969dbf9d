"""Maximum likelihood fitting of recursive linear models with correlated
errors, represented as bow-free acyclic path diagrams (mixed graphs with
directed and bi-directed edges).

The fitter updates one structural equation at a time with nothing but
least squares on residuals and pseudo-variables, keeps every iterate's
covariance positive definite, and never decreases the likelihood.
"""

from . import kernels
from .data import DataMatrix, EmpiricalCovariance, empirical_covariance
from .errors import (
    ConfigError,
    CyclicGraphError,
    EmptyDataError,
    GraphParseError,
    InvalidVertexError,
    ModelClassError,
    ModelMismatchError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
    RicfError,
    ShapeError,
)
from .fitting import (
    FitConfig,
    FitResult,
    FitStatus,
    VertexUpdate,
    conditional_variance,
    dag_starting_values,
    decomposed_log_likelihood,
    fit,
    pseudo_variables,
    residuals,
    update_vertex,
)
from .graphs import MixedGraph
from .model import (
    ErrorCovariance,
    FisherInfo,
    ParameterVectorization,
    PathCoefficients,
    conditional_regression,
    fisher_information,
    hessian,
    implied_covariance,
    log_likelihood,
    quartet_constraint_residual,
    score,
)
from .simulate import BapGenConfig, random_bap, random_parameters, sample_mvn

__version__ = "0.1.0"

__all__ = [
    "BapGenConfig",
    "ConfigError",
    "CyclicGraphError",
    "DataMatrix",
    "EmpiricalCovariance",
    "EmptyDataError",
    "ErrorCovariance",
    "FisherInfo",
    "FitConfig",
    "FitResult",
    "FitStatus",
    "GraphParseError",
    "InvalidVertexError",
    "MixedGraph",
    "ModelClassError",
    "ModelMismatchError",
    "NotPositiveDefiniteError",
    "ParameterVectorization",
    "PathCoefficients",
    "RankDeficiencyError",
    "RicfError",
    "ShapeError",
    "VertexUpdate",
    "conditional_regression",
    "conditional_variance",
    "dag_starting_values",
    "decomposed_log_likelihood",
    "empirical_covariance",
    "fisher_information",
    "fit",
    "hessian",
    "implied_covariance",
    "kernels",
    "log_likelihood",
    "pseudo_variables",
    "quartet_constraint_residual",
    "random_bap",
    "random_parameters",
    "residuals",
    "sample_mvn",
    "score",
    "update_vertex",
]
