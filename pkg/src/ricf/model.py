"""Parameter spaces and likelihood calculus for normal linear models.

A path diagram G determines a Gaussian model over covariance matrices

    Sigma = (I - B)^{-1} Omega (I - B)^{-t}

where B has support on the directed edges of G and the symmetric
positive definite Omega has off-diagonal support on the bi-directed
edges.  This module provides the parameter containers, the covariance
parameterization, the profile log-likelihood (additive constant
dropped throughout), its gradient, its Hessian, and the expected
Fisher information.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    ModelMismatchError,
    NotPositiveDefiniteError,
    ShapeError,
)
from .graphs import MixedGraph

__all__ = [
    "PathCoefficients",
    "ErrorCovariance",
    "ParameterVectorization",
    "FisherInfo",
    "implied_covariance",
    "log_likelihood",
    "score",
    "hessian",
    "fisher_information",
    "conditional_regression",
    "quartet_constraint_residual",
]


def _as_square(values, n, what):
    a = np.asarray(values, dtype=float)
    if a.shape != (n, n):
        raise ShapeError(f"{what} must be {n}x{n}, got {a.shape}")
    return a


def cholesky_factor(a: np.ndarray, what: str = "matrix"):
    """Lower Cholesky factor of ``a``; raises NotPositiveDefiniteError."""
    try:
        return scipy.linalg.cholesky(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class PathCoefficients:
    """Matrix B of path coefficients with support on the directed edges.

    ``values[i, j]`` is the coefficient of variable j in the equation
    for variable i, nonzero only when the graph has the edge j -> i.
    For acyclic graphs det(I - B) = 1, checked at construction via the
    topological order.
    """

    graph: MixedGraph
    values: np.ndarray

    def __init__(self, graph: MixedGraph, values):
        p = graph.n_vertices
        vals = _as_square(values, p, "path coefficient matrix")
        mask = np.zeros((p, p), dtype=bool)
        for j, i in graph.directed:
            mask[i, j] = True
        off = vals[~mask]
        if np.any(off != 0.0):
            bad = np.argwhere(~mask & (vals != 0.0))
            i, j = bad[0]
            raise ShapeError(
                f"entry ({i},{j}) must be zero: no edge {j} -> {i} in graph")
        if graph.is_acyclic():
            order = graph.topological_order()
            a = np.eye(p) - vals
            tri = a[np.ix_(order, order)]
            if not np.allclose(np.triu(tri, 1), 0.0):
                raise AssertionError("triangularization failed")
            assert np.all(np.diag(tri) == 1.0)  # det(I - B) = 1
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        return (isinstance(other, PathCoefficients)
                and self.graph == other.graph
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class ErrorCovariance:
    """Symmetric PD error covariance Omega with off-diagonal support on
    the bi-directed edges."""

    graph: MixedGraph
    values: np.ndarray

    def __init__(self, graph: MixedGraph, values):
        p = graph.n_vertices
        vals = _as_square(values, p, "error covariance matrix")
        if not np.allclose(vals, vals.T):
            raise ShapeError("error covariance must be symmetric")
        vals = 0.5 * (vals + vals.T)
        mask = np.eye(p, dtype=bool)
        for i, j in graph.bidirected:
            mask[i, j] = mask[j, i] = True
        if np.any(vals[~mask] != 0.0):
            bad = np.argwhere(~mask & (vals != 0.0))
            i, j = bad[0]
            raise ShapeError(
                f"entry ({i},{j}) must be zero: no edge {i} <-> {j} in graph")
        cholesky_factor(vals, "error covariance")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        return (isinstance(other, ErrorCovariance)
                and self.graph == other.graph
                and np.array_equal(self.values, other.values))


class ParameterVectorization:
    """Enumeration of the free entries of (B, Omega).

    ``beta_index`` lists (i, j) pairs with j a parent of i, sorted;
    ``omega_index`` lists (i, j) pairs with i <= j and either i == j or
    j a spouse of i.  Together they define the parameter vector
    theta = (beta, omega) used by score / hessian / fisher information.
    The implied 0/1 selection matrices are never materialized; gather
    and scatter work directly off the index lists.
    """

    def __init__(self, graph: MixedGraph):
        self.graph = graph
        self.beta_index = sorted((i, j) for j, i in graph.directed)
        diag = [(i, i) for i in range(graph.n_vertices)]
        self.omega_index = sorted(diag + list(graph.bidirected))

    @property
    def n_beta(self) -> int:
        return len(self.beta_index)

    @property
    def n_omega(self) -> int:
        return len(self.omega_index)

    @property
    def size(self) -> int:
        return self.n_beta + self.n_omega

    def names(self) -> list[str]:
        g = self.graph
        out = [f"b[{g.name_of(j)}->{g.name_of(i)}]" for i, j in self.beta_index]
        for i, j in self.omega_index:
            if i == j:
                out.append(f"w[{g.name_of(i)}]")
            else:
                out.append(f"w[{g.name_of(i)}<->{g.name_of(j)}]")
        return out

    def pack(self, b_values: np.ndarray, o_values: np.ndarray) -> np.ndarray:
        beta = [b_values[i, j] for i, j in self.beta_index]
        omega = [o_values[i, j] for i, j in self.omega_index]
        return np.array(beta + omega, dtype=float)

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.graph.n_vertices
        b = np.zeros((p, p))
        o = np.zeros((p, p))
        for t, (i, j) in enumerate(self.beta_index):
            b[i, j] = theta[t]
        for t, (i, j) in enumerate(self.omega_index):
            o[i, j] = o[j, i] = theta[self.n_beta + t]
        return b, o


@dataclass(frozen=True)
class FisherInfo:
    """Expected information blocks over a parameter vectorization."""

    vectorization: ParameterVectorization
    beta_beta: np.ndarray
    beta_omega: np.ndarray
    omega_omega: np.ndarray

    @cached_property
    def matrix(self) -> np.ndarray:
        top = np.hstack([self.beta_beta, self.beta_omega])
        bottom = np.hstack([self.beta_omega.T, self.omega_omega])
        return np.vstack([top, bottom])


# ---------------------------------------------------------------------------
# internal array-level routines (shared with the fitting driver)
# ---------------------------------------------------------------------------


def _check_same_graph(b: PathCoefficients, o: ErrorCovariance):
    if b.graph is not o.graph and b.graph != o.graph:
        raise ModelMismatchError(
            "path coefficients and error covariance built on different graphs")


def implied_covariance_values(b_values, o_values, order) -> np.ndarray:
    """Sigma = (I-B)^{-1} Omega (I-B)^{-t} via triangular solves along a
    topological order; no explicit inversion."""
    p = b_values.shape[0]
    a = np.eye(p) - b_values
    perm = np.asarray(order)
    ap = a[np.ix_(perm, perm)]
    op = o_values[np.ix_(perm, perm)]
    # ap is unit lower triangular in this order
    x = scipy.linalg.solve_triangular(ap, op, lower=True, unit_diagonal=True)
    sp = scipy.linalg.solve_triangular(ap, x.T, lower=True, unit_diagonal=True).T
    sigma = np.empty_like(sp)
    sigma[np.ix_(perm, perm)] = sp
    return 0.5 * (sigma + sigma.T)


def log_likelihood_values(b_values, o_values, s, n) -> float:
    p = s.shape[0]
    chol = cholesky_factor(o_values, "error covariance")
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    a = np.eye(p) - b_values
    m = a @ s @ a.T
    solved = scipy.linalg.cho_solve((chol, True), m)
    return -0.5 * n * (logdet + np.trace(solved))


def _omega_inverse(o_values):
    chol = cholesky_factor(o_values, "error covariance")
    return scipy.linalg.cho_solve((chol, True), np.eye(o_values.shape[0]))


def score_values(b_values, o_values, s, n, vec: ParameterVectorization):
    p = s.shape[0]
    u = _omega_inverse(o_values)
    a = np.eye(p) - b_values
    grad_b = n * (u @ a @ s)
    grad_o = -0.5 * n * (u - u @ (a @ s @ a.T) @ u)
    out = np.empty(vec.size)
    for t, (i, j) in enumerate(vec.beta_index):
        out[t] = grad_b[i, j]
    for t, (i, j) in enumerate(vec.omega_index):
        out[vec.n_beta + t] = grad_o[i, j] if i == j else 2.0 * grad_o[i, j]
    return out


def _sym_placements(i, j):
    return ((i, j),) if i == j else ((i, j), (j, i))


def _omega_quad_form(x, y, omega_index):
    """Entrywise Q^t (X kron Y) Q over the omega index pairs.

    Entry for (w_ij, w_kl) sums X[b,d] * Y[a,c] over the symmetric
    placements (a,b) of w_ij and (c,d) of w_kl.
    """
    m = len(omega_index)
    out = np.zeros((m, m))
    for t1, (i, j) in enumerate(omega_index):
        for t2, (k, l) in enumerate(omega_index):
            acc = 0.0
            for a, b in _sym_placements(i, j):
                for c, d in _sym_placements(k, l):
                    acc += x[b, d] * y[a, c]
            out[t1, t2] = acc
    return out


def _beta_omega_block(x, y, beta_index, omega_index):
    """Entrywise P^t (X kron Y) Q.

    Entry for (b_ij, w_kl) is X[j,l] Y[i,k] (+ X[j,k] Y[i,l] if k != l).
    """
    out = np.zeros((len(beta_index), len(omega_index)))
    for t1, (i, j) in enumerate(beta_index):
        for t2, (k, l) in enumerate(omega_index):
            v = x[j, l] * y[i, k]
            if k != l:
                v += x[j, k] * y[i, l]
            out[t1, t2] = v
    return out


def _beta_beta_block(s, u, beta_index):
    out = np.zeros((len(beta_index), len(beta_index)))
    for t1, (i, j) in enumerate(beta_index):
        for t2, (k, l) in enumerate(beta_index):
            out[t1, t2] = s[j, l] * u[i, k]
    return out


def hessian_values(b_values, o_values, s, n, vec: ParameterVectorization):
    p = s.shape[0]
    u = _omega_inverse(o_values)
    a = np.eye(p) - b_values
    r = s @ a.T @ u          # transpose of Omega^{-1} (I-B) S
    t = u @ (a @ s @ a.T) @ u
    h_bb = -n * _beta_beta_block(s, u, vec.beta_index)
    h_bo = -n * _beta_omega_block(r, u, vec.beta_index, vec.omega_index)
    h_oo = -0.5 * n * (
        _omega_quad_form(u, t, vec.omega_index)
        + _omega_quad_form(t, u, vec.omega_index)
        - _omega_quad_form(u, u, vec.omega_index)
    )
    top = np.hstack([h_bb, h_bo])
    bottom = np.hstack([h_bo.T, h_oo])
    return np.vstack([top, bottom])


# ---------------------------------------------------------------------------
# public API on parameter containers
# ---------------------------------------------------------------------------


def implied_covariance(b: PathCoefficients, o: ErrorCovariance) -> np.ndarray:
    """Model covariance Sigma implied by (B, Omega); symmetric PD."""
    _check_same_graph(b, o)
    return implied_covariance_values(
        b.values, o.values, b.graph.topological_order())


def log_likelihood(b: PathCoefficients, o: ErrorCovariance,
                   s: np.ndarray, n: int) -> float:
    """Gaussian log-likelihood at (B, Omega) given the empirical
    covariance ``s`` of ``n`` observations.

    The additive constant -(n p / 2) log(2 pi) is dropped, consistently
    with every other likelihood value produced by this package.
    """
    s = _as_square(s, b.graph.n_vertices, "empirical covariance")
    _check_same_graph(b, o)
    return log_likelihood_values(b.values, o.values, s, n)


def score(b: PathCoefficients, o: ErrorCovariance, s: np.ndarray, n: int,
          vec: ParameterVectorization | None = None) -> np.ndarray:
    """Gradient of the log-likelihood with respect to (beta, omega).

    Stationary points of this vector are the likelihood equations; the
    beta block carries a factor n and the omega block a factor n/2
    relative to the unscaled estimating equations, so the output is the
    exact gradient (finite differences reproduce it).
    """
    _check_same_graph(b, o)
    s = _as_square(s, b.graph.n_vertices, "empirical covariance")
    vec = vec or ParameterVectorization(b.graph)
    return score_values(b.values, o.values, s, n, vec)


def hessian(b: PathCoefficients, o: ErrorCovariance, s: np.ndarray, n: int,
            vec: ParameterVectorization | None = None) -> np.ndarray:
    """Second derivative matrix of the log-likelihood in (beta, omega)."""
    _check_same_graph(b, o)
    s = _as_square(s, b.graph.n_vertices, "empirical covariance")
    vec = vec or ParameterVectorization(b.graph)
    return hessian_values(b.values, o.values, s, n, vec)


def fisher_information(b: PathCoefficients, o: ErrorCovariance,
                       vec: ParameterVectorization | None = None) -> FisherInfo:
    """Expected Fisher information of the model at (B, Omega).

    Equals -hessian/n evaluated at s = implied_covariance(B, Omega).
    """
    _check_same_graph(b, o)
    g = b.graph
    vec = vec or ParameterVectorization(g)
    p = g.n_vertices
    u = _omega_inverse(o.values)
    sigma = implied_covariance(b, o)
    order = g.topological_order()
    a = np.eye(p) - b.values
    ap = a[np.ix_(order, order)]
    ainv_p = scipy.linalg.solve_triangular(
        ap, np.eye(p), lower=True, unit_diagonal=True)
    ainv = np.empty_like(ainv_p)
    ainv[np.ix_(order, order)] = ainv_p
    i_bb = _beta_beta_block(sigma, u, vec.beta_index)
    i_bo = _beta_omega_block(ainv, u, vec.beta_index, vec.omega_index)
    i_oo = 0.5 * _omega_quad_form(u, u, vec.omega_index)
    return FisherInfo(vec, i_bb, i_bo, i_oo)


def conditional_regression(sigma: np.ndarray, response: int,
                           covariates) -> tuple[np.ndarray, float]:
    """Population regression of one variable on a set of others.

    Returns the coefficient vector Sigma_{r,C} Sigma_{C,C}^{-1}
    (ordered like ``covariates``) and the residual variance
    sigma_rr - Sigma_{r,C} Sigma_{C,C}^{-1} Sigma_{C,r}.
    """
    sigma = np.asarray(sigma, dtype=float)
    cov = [int(c) for c in covariates]
    if response in cov:
        raise ValueError("response cannot be one of the covariates")
    if not cov:
        return np.zeros(0), float(sigma[response, response])
    sub = sigma[np.ix_(cov, cov)]
    cross = sigma[cov, response]
    chol = cholesky_factor(sub, "covariate covariance block")
    coef = scipy.linalg.cho_solve((chol, True), cross)
    resid = float(sigma[response, response] - cross @ coef)
    return coef, resid


def quartet_constraint_residual(sigma: np.ndarray) -> float:
    """Residual of the polynomial constraint tying together the
    covariances of the four-variable model 1->2, 1->3, 2->3, 3->4, 2<->4.

    Covariance matrices implied by that model satisfy

        (s11 s22 - s12^2)(s14 s33 - s13 s34)
            = (s13 s24 - s14 s23)(s12 s13 - s11 s23),

    equivalently: variables 1 and 4 are conditionally independent given
    variable 3 and the residual of 2 regressed on 1.  Returns the
    difference of the two sides (zero on the model, generically nonzero
    off it).
    """
    s = np.asarray(sigma, dtype=float)
    if s.shape != (4, 4):
        raise ShapeError(f"expected a 4x4 covariance matrix, got {s.shape}")
    lhs = (s[0, 0] * s[1, 1] - s[0, 1] ** 2) * (s[0, 3] * s[2, 2] - s[0, 2] * s[2, 3])
    rhs = (s[0, 2] * s[1, 3] - s[0, 3] * s[1, 2]) * (s[0, 1] * s[0, 2] - s[0, 0] * s[1, 2])
    return float(lhs - rhs)
