"""Random graph, parameter and data generation for simulation studies.

Graphs are drawn pairwise: every unordered pair gets a directed edge
(low to high index) with probability d, a bi-directed edge with
probability b, or no edge, after which the vertex labels are permuted
uniformly.  Free path coefficients and error covariances are standard
normal draws, with each diagonal entry of Omega pushed above its row's
absolute off-diagonal sum by a chi-square(1) amount to force strict
diagonal dominance (hence positive definiteness).

All entry points take explicit seeds; replicate-level parallelism
should hand each replicate its own child of a ``numpy.random.SeedSequence``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .errors import ConfigError, NotPositiveDefiniteError
from .graphs import MixedGraph
from .model import ErrorCovariance, ParameterVectorization, PathCoefficients

__all__ = [
    "BapGenConfig",
    "random_bap",
    "random_parameters",
    "sample_mvn",
]


@dataclass(frozen=True)
class BapGenConfig:
    """Edge probabilities for random bow-free acyclic path diagrams."""

    p: int
    d: float
    b: float
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError("p must be at least 1")
        if self.d < 0 or self.b < 0:
            raise ConfigError("edge probabilities must be non-negative")
        if self.d + self.b > 1:
            raise ConfigError(
                f"d + b must not exceed 1, got {self.d} + {self.b}")


def random_bap(config: BapGenConfig) -> MixedGraph:
    """Draw a random BAP.

    Each pair i < j independently receives i -> j with probability d or
    i <-> j with probability b; a uniform relabelling of the vertices is
    applied afterwards.  The result is acyclic by construction (directed
    edges follow the pre-permutation order) and bow-free (at most one
    edge per pair), so every draw is a valid BAP.
    """
    rng = np.random.default_rng(config.seed)
    p, d, b = config.p, config.d, config.b
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    u = rng.random(len(pairs))
    directed = [(i, j) for (i, j), x in zip(pairs, u) if x < d]
    bidirected = [(i, j) for (i, j), x in zip(pairs, u) if d <= x < d + b]
    perm = rng.permutation(p)
    return MixedGraph(
        p,
        directed=[(perm[i], perm[j]) for i, j in directed],
        bidirected=[(perm[i], perm[j]) for i, j in bidirected],
    )


def random_parameters(graph: MixedGraph, seed=None
                      ) -> tuple[PathCoefficients, ErrorCovariance]:
    """Generic parameters on a BAP.

    Free entries of B and free off-diagonal entries of Omega are
    standard normal; omega_ii is the squared standard normal (a
    chi-square(1) draw) plus the absolute row sum of the off-diagonal
    entries, making Omega strictly diagonally dominant and hence
    positive definite on every draw.
    """
    rng = np.random.default_rng(seed)
    p = graph.n_vertices
    vec = ParameterVectorization(graph)
    b = np.zeros((p, p))
    for i, j in vec.beta_index:
        b[i, j] = rng.standard_normal()
    om = np.zeros((p, p))
    for i, j in vec.omega_index:
        if i != j:
            om[i, j] = om[j, i] = rng.standard_normal()
    offdiag_abs = np.sum(np.abs(om), axis=1)
    for i in range(p):
        om[i, i] = rng.standard_normal() ** 2 + offdiag_abs[i]
    return PathCoefficients(graph, b), ErrorCovariance(graph, om)


def sample_mvn(sigma: np.ndarray, n: int, seed=None) -> DataMatrix:
    """n samples from a centered multivariate normal with covariance
    ``sigma``, as a variables-by-observations matrix."""
    sigma = np.asarray(sigma, dtype=float)
    if n < 1:
        raise ValueError("sample size must be positive")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "covariance is not positive definite") from exc
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((sigma.shape[0], n))
    return DataMatrix(chol @ g)
