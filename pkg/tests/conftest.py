"""Shared fixtures: the small reference graphs and numeric helpers."""

import numpy as np
import pytest

from ricf import (
    ErrorCovariance,
    MixedGraph,
    ParameterVectorization,
    PathCoefficients,
    log_likelihood,
    score,
)
from ricf.simulate import BapGenConfig, random_bap, random_parameters


@pytest.fixture
def chain4_cyclic():
    """Four variables with the feedback loop 2 -> 3 -> 4 -> 2."""
    return MixedGraph(4, directed=[(0, 1), (0, 2), (1, 2), (2, 3), (3, 1)])


@pytest.fixture
def chain4_bowed():
    """Acyclic but with both 3 -> 4 and 3 <-> 4 (an instrumental-variable
    style double edge)."""
    return MixedGraph(4, directed=[(0, 1), (0, 2), (1, 2), (2, 3)],
                      bidirected=[(2, 3)])


@pytest.fixture
def quartet():
    """The everywhere-identifiable four-variable BAP
    1->2, 1->3, 2->3, 3->4 with 2 <-> 4 (0-indexed here)."""
    return MixedGraph(4, directed=[(0, 1), (0, 2), (1, 2), (2, 3)],
                      bidirected=[(1, 3)])


@pytest.fixture
def sur_graph():
    """Two seemingly unrelated regressions: y4 ~ y1 + y2, y5 ~ y3, with
    correlated equation errors 4 <-> 5."""
    return MixedGraph(5, directed=[(0, 3), (1, 3), (2, 4)],
                      bidirected=[(3, 4)])


@pytest.fixture
def five_chain_almost_identifiable():
    """Directed chain on five vertices plus bi-directed edges 1<->4,
    1<->5, 2<->4, 3<->5; almost but not everywhere identifiable."""
    return MixedGraph(
        5,
        directed=[(0, 1), (1, 2), (2, 3), (3, 4)],
        bidirected=[(0, 3), (0, 4), (1, 3), (2, 4)],
    )


@pytest.fixture
def trial_graph():
    """Two-phase trial model: treatment, first response, second
    treatment, outcome; confounding between the responses.
    Vertices: 0 = Ex, 1 = BP, 2 = dBMI, 3 = Y."""
    return MixedGraph(
        4,
        directed=[(0, 1), (0, 2), (1, 2), (0, 3), (2, 3)],
        bidirected=[(1, 3)],
        names=("Ex", "BP", "dBMI", "Y"),
    )


def random_spd(rng, p, extra=8):
    """Well-conditioned random covariance-like SPD matrix."""
    a = rng.standard_normal((p, p + extra))
    s = a @ a.T / (p + extra)
    return 0.5 * (s + s.T)


def random_instance(seed, p=5, d=0.3, b=0.2):
    """Random BAP with generic parameters."""
    g = random_bap(BapGenConfig(p=p, d=d, b=b, seed=seed))
    coeffs, errors = random_parameters(g, seed=seed + 1)
    return g, coeffs, errors


def fd_gradient(f, theta, rel=1e-5):
    """Central finite differences with the step rule h = rel*max(1,|t|)."""
    out = np.zeros_like(theta)
    for t in range(theta.size):
        h = rel * max(1.0, abs(theta[t]))
        up = theta.copy()
        up[t] += h
        down = theta.copy()
        down[t] -= h
        out[t] = (f(up) - f(down)) / (2.0 * h)
    return out


def loglik_of_theta(graph, vec, s, n):
    def f(theta):
        b, o = vec.unpack(theta)
        return log_likelihood(PathCoefficients(graph, b),
                              ErrorCovariance(graph, o), s, n)
    return f


def score_of_theta(graph, vec, s, n):
    def f(theta):
        b, o = vec.unpack(theta)
        return score(PathCoefficients(graph, b),
                     ErrorCovariance(graph, o), s, n, vec)
    return f
