"""Residual iterative conditional fitting for bow-free acyclic path diagrams.

The fitter cycles through the vertices in topological order.  For each
vertex i it fixes every other row of (B, Omega), forms residuals of the
remaining variables and pseudo-variables (the error covariance solved
against those residuals), and re-estimates the i-th rows by least
squares of variable i on its parents' observations and its spouses'
pseudo-variables.  Each step is a partial maximization of the
log-likelihood, so the likelihood never decreases and every iterate
keeps Omega (and hence the implied covariance) positive definite.

Vertices without spouses are finished after their first visit: their
regression does not involve pseudo-variables and never changes again.
On a graph with no bi-directed edges at all the algorithm therefore
terminates in a single cycle, reproducing the usual per-vertex
regressions of recursive linear models.

Internally everything runs on the empirical covariance, which is
sufficient: fitting a raw data matrix first reduces it to S = Y Y^t / n.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from . import kernels
from .data import DataMatrix, EmpiricalCovariance, empirical_covariance
from .errors import (
    ConfigError,
    ModelClassError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
    ShapeError,
)
from .graphs import MixedGraph
from .model import (
    ErrorCovariance,
    PathCoefficients,
    cholesky_factor,
    implied_covariance_values,
    log_likelihood_values,
)

__all__ = [
    "FitConfig",
    "FitStatus",
    "FitResult",
    "VertexUpdate",
    "fit",
    "residuals",
    "pseudo_variables",
    "update_vertex",
    "conditional_variance",
    "dag_starting_values",
    "decomposed_log_likelihood",
]


@dataclass(frozen=True)
class FitConfig:
    """Iteration controls.

    tol:
        Convergence threshold on the largest absolute change of any free
        parameter over one full cycle.
    max_cycles:
        Cycle budget.
    divergence_threshold:
        Magnitude at which parameters count as diverging; when exceeded
        while successive implied covariances move by less than ``tol``,
        the fit stops with ``parameter_divergence_sigma_converged``
        instead of erroring (possible for models that are only almost
        everywhere identifiable).
    district_restriction:
        Solve pseudo-variables on the bi-directed connected component of
        each vertex instead of all remaining vertices.  Iterates are
        identical either way; the restriction is purely a cost saving.
    """

    tol: float = 1e-8
    max_cycles: int = 5000
    divergence_threshold: float = 1e8
    district_restriction: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_cycles < 1:
            raise ConfigError("max_cycles must be at least 1")
        if not self.divergence_threshold > 0:
            raise ConfigError("divergence_threshold must be positive")


class FitStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_CYCLES_REACHED = "max_cycles_reached"
    PARAMETER_DIVERGENCE_SIGMA_CONVERGED = "parameter_divergence_sigma_converged"


@dataclass
class FitResult:
    b_hat: PathCoefficients
    omega_hat: ErrorCovariance
    sigma_hat: np.ndarray
    loglik_trace: list[float]
    status: FitStatus
    cycles_used: int
    closed_form_vertices: set[int]
    n: int

    @property
    def log_likelihood(self) -> float:
        return self.loglik_trace[-1]

    @property
    def converged(self) -> bool:
        return self.status is FitStatus.CONVERGED


def _resolve_observations(graph, observations):
    p = graph.n_vertices
    if isinstance(observations, EmpiricalCovariance):
        if observations.n_variables != p:
            raise ShapeError(
                f"covariance has {observations.n_variables} variables, "
                f"graph has {p}")
        return np.array(observations.values), observations.n
    if isinstance(observations, DataMatrix):
        y = observations.values
    else:
        y = np.asarray(observations, dtype=float)
    if y.ndim != 2 or y.shape[0] != p:
        raise ShapeError(
            f"data must be {p} x n (variables by observations), got {y.shape}")
    cov = empirical_covariance(y)
    return np.array(cov.values), cov.n


def _validate_bap(graph: MixedGraph):
    if not graph.is_acyclic():
        raise ModelClassError(
            "graph has a directed cycle; only acyclic path diagrams are "
            "supported")
    if not graph.is_bow_free():
        pairs = sorted({(min(j, i), max(j, i)) for j, i in graph.directed}
                       & graph.bidirected)
        raise ModelClassError(
            f"graph has bows (directed plus bi-directed edge) at {pairs}; "
            "only bow-free path diagrams are supported")


def fit(graph: MixedGraph,
        observations,
        config: FitConfig | None = None,
        *,
        start: tuple[PathCoefficients, ErrorCovariance] | None = None,
        backend: str = "auto",
        visit_order=None) -> FitResult:
    """Maximum likelihood estimation of (B, Omega) on a BAP.

    Parameters
    ----------
    graph:
        A bow-free acyclic path diagram.
    observations:
        A ``DataMatrix`` (or plain variables-by-samples array), or an
        ``EmpiricalCovariance``; raw data is reduced to its empirical
        covariance first, so both entry points give identical results.
    config:
        Iteration controls; defaults to ``FitConfig()``.
    start:
        Optional starting value.  By default the fit starts from the
        exact MLE of the recursive model obtained by dropping all
        bi-directed edges (per-vertex regressions, diagonal Omega).
    backend:
        Cycle kernel: "auto", "compiled" or "python".
    visit_order:
        Diagnostic override of the per-cycle vertex order (default:
        topological order).  The converged likelihood value does not
        depend on it; the estimates may, when the likelihood is
        multimodal.
    """
    config = config or FitConfig()
    _validate_bap(graph)
    s, n = _resolve_observations(graph, observations)
    cholesky_factor(s, "empirical covariance")

    if start is None:
        b0, o0 = dag_starting_values(graph, s)
    else:
        b0, o0 = start
        if b0.graph != graph or o0.graph != graph:
            raise ConfigError("starting values built on a different graph")
    b = np.array(b0.values)
    om = np.array(o0.values)

    topo = graph.topological_order()
    visit = topo if visit_order is None else [int(v) for v in visit_order]
    if sorted(visit) != list(range(graph.n_vertices)):
        raise ConfigError("visit_order must be a permutation of the vertices")
    iterated = [i for i in visit if graph.spouses(i)]
    closed_form = {i for i in visit if not graph.spouses(i)}
    first_plan = kernels.build_plan(graph, visit, config.district_restriction)
    steady_plan = kernels.build_plan(graph, iterated, config.district_restriction)
    kernel = kernels.get_backend(backend)

    trace: list[float] = []
    sigma = None
    sigma_prev = None
    status = FitStatus.MAX_CYCLES_REACHED
    cycles = 0
    for cycle in range(1, config.max_cycles + 1):
        cycles = cycle
        plan = first_plan if cycle == 1 else steady_plan
        delta = kernel.run_cycle(s, b, om, plan)
        trace.append(log_likelihood_values(b, om, s, n))
        sigma = implied_covariance_values(b, om, topo)
        if delta < config.tol or not iterated:
            status = FitStatus.CONVERGED
            break
        if sigma_prev is not None:
            largest = max(np.max(np.abs(b)), np.max(np.abs(om)))
            sigma_move = np.max(np.abs(sigma - sigma_prev))
            if (largest > config.divergence_threshold
                    and sigma_move < config.tol):
                status = FitStatus.PARAMETER_DIVERGENCE_SIGMA_CONVERGED
                break
        sigma_prev = sigma

    return FitResult(
        b_hat=PathCoefficients(graph, b),
        omega_hat=ErrorCovariance(graph, om),
        sigma_hat=sigma,
        loglik_trace=trace,
        status=status,
        cycles_used=cycles,
        closed_form_vertices=closed_form,
        n=n,
    )


# ---------------------------------------------------------------------------
# building blocks (data-matrix forms, used directly in tests and reports)
# ---------------------------------------------------------------------------


def _data_values(y):
    if isinstance(y, DataMatrix):
        return y.values
    return np.asarray(y, dtype=float)


def residuals(b: PathCoefficients, y) -> np.ndarray:
    """Error estimates (I - B) Y for a data matrix Y."""
    yv = _data_values(y)
    p = b.graph.n_vertices
    if yv.ndim != 2 or yv.shape[0] != p:
        raise ShapeError(
            f"data must be {p} x n (variables by observations), got {yv.shape}")
    return yv - b.values @ yv


def pseudo_variables(o: ErrorCovariance, eps: np.ndarray, i: int,
                     district_only: bool = False) -> np.ndarray:
    """Solve the error covariance (without row/column i) against the
    residuals of the other variables.

    Rows are ordered like the remaining vertices in ascending order.
    With ``district_only`` the solve runs just on the bi-directed
    connected component of i; rows outside it are zero.  Entries at the
    spouses of i agree with the full solve either way, which is all the
    vertex update consumes.
    """
    g = o.graph
    p = g.n_vertices
    g._check_vertex(i)
    eps = np.asarray(eps, dtype=float)
    others = [v for v in range(p) if v != i]
    if eps.shape[0] == p:
        eps_rest = eps[others]
    elif eps.shape[0] == p - 1:
        eps_rest = eps
    else:
        raise ShapeError(
            f"residual matrix must have {p} or {p - 1} rows, got {eps.shape[0]}")
    if district_only:
        dis = sorted(g.district(i))
        z = np.zeros_like(eps_rest)
        if dis:
            rows = [others.index(v) for v in dis]
            chol = _cho_block(o.values, dis, i)
            z[rows] = scipy.linalg.cho_solve(chol, eps_rest[rows])
        return z
    chol = _cho_block(o.values, others, i)
    return scipy.linalg.cho_solve(chol, eps_rest)


def _cho_block(om, idx, vertex):
    try:
        return scipy.linalg.cho_factor(om[np.ix_(idx, idx)], lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"error covariance block excluding vertex {vertex} is not "
            "positive definite") from exc


class VertexUpdate(NamedTuple):
    """Re-estimated i-th rows from one least-squares step."""

    vertex: int
    beta: np.ndarray              # coefficients on the parents, sorted
    omega_spouses: np.ndarray     # covariances with the spouses, sorted
    omega_ii: float
    conditional_variance: float   # residual variance of the regression

    def apply(self, b_values: np.ndarray, o_values: np.ndarray,
              graph: MixedGraph):
        i = self.vertex
        pa = sorted(graph.parents(i))
        spo = sorted(graph.spouses(i))
        b_values[i, pa] = self.beta
        o_values[i, spo] = self.omega_spouses
        o_values[spo, i] = self.omega_spouses
        o_values[i, i] = self.omega_ii


def update_vertex(graph: MixedGraph, b: PathCoefficients, o: ErrorCovariance,
                  y, i: int, district_restriction: bool = True) -> VertexUpdate:
    """Single least-squares update of vertex i on a raw data matrix.

    Regresses Y_i on the parents' observations and the spouses'
    pseudo-variables via a pivoted QR of the regressor block, then
    recovers omega_ii from the conditional variance.  The inputs are
    not modified; apply the returned rows to copies when iterating by
    hand (the main fitter uses the covariance-based kernels instead).
    """
    yv = _data_values(y)
    p = graph.n_vertices
    graph._check_vertex(i)
    n = yv.shape[1]
    pa = sorted(graph.parents(i))
    spo = sorted(graph.spouses(i))
    if n < len(pa) + len(spo) + 1:
        raise ShapeError(
            f"need at least {len(pa) + len(spo) + 1} observations to update "
            f"vertex {i}, got {n}")

    cols = [yv[j] for j in pa]
    if spo:
        eps = residuals(b, yv)
        others = [v for v in range(p) if v != i]
        z = pseudo_variables(o, np.delete(eps, i, axis=0), i,
                             district_only=district_restriction)
        for k in spo:
            cols.append(z[others.index(k)])
    response = yv[i]
    if not cols:
        w = float(response @ response) / n
        return VertexUpdate(i, np.empty(0), np.empty(0), w, w)

    x = np.column_stack(cols)
    labels = [f"Y[{j}]" for j in pa] + [f"Z[{k}]" for k in spo]
    q, r, piv = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(x.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < x.shape[1]:
        dependent = [labels[t] for t in sorted(piv[rank:])]
        raise RankDeficiencyError(
            f"regressors for vertex {i} are linearly dependent: "
            + ", ".join(dependent), columns=dependent)
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ response)
    coef = np.empty_like(coef_piv)
    coef[piv] = coef_piv
    resid = response - x @ coef
    w = float(resid @ resid) / n

    beta = coef[:len(pa)]
    omega_spo = coef[len(pa):]
    omega_ii = w
    if spo:
        dis = sorted(graph.district(i)) if district_restriction else \
            [v for v in range(p) if v != i]
        chol = _cho_block(o.values, dis, i)
        embedded = np.zeros(len(dis))
        for t, k in enumerate(spo):
            embedded[dis.index(k)] = omega_spo[t]
        omega_ii = w + float(embedded @ scipy.linalg.cho_solve(chol, embedded))
    return VertexUpdate(i, beta, omega_spo, omega_ii, w)


def conditional_variance(o: ErrorCovariance, i: int) -> float:
    """Variance of error i given all other errors (a Schur complement;
    strictly positive for positive definite Omega)."""
    g = o.graph
    g._check_vertex(i)
    p = g.n_vertices
    others = [v for v in range(p) if v != i]
    if not others:
        return float(o.values[i, i])
    chol = _cho_block(o.values, others, i)
    row = o.values[others, i]
    return float(o.values[i, i] - row @ scipy.linalg.cho_solve(chol, row))


def dag_starting_values(graph: MixedGraph,
                        s) -> tuple[PathCoefficients, ErrorCovariance]:
    """Exact MLE of the recursive model with all bi-directed edges removed.

    Per-vertex regressions on the parents read off the covariance;
    Omega is the diagonal of residual variances.  Always a valid
    (B, Omega) pair for the full graph, used as the default start.
    """
    if isinstance(s, EmpiricalCovariance):
        s = s.values
    s = np.asarray(s, dtype=float)
    p = graph.n_vertices
    if s.shape != (p, p):
        raise ShapeError(f"covariance must be {p}x{p}, got {s.shape}")
    cholesky_factor(s, "empirical covariance")
    b = np.zeros((p, p))
    om = np.zeros((p, p))
    for i in range(p):
        pa = sorted(graph.parents(i))
        if pa:
            chol = scipy.linalg.cho_factor(s[np.ix_(pa, pa)], lower=True)
            coef = scipy.linalg.cho_solve(chol, s[pa, i])
            b[i, pa] = coef
            om[i, i] = s[i, i] - coef @ s[pa, i]
        else:
            om[i, i] = s[i, i]
    return PathCoefficients(graph, b), ErrorCovariance(graph, om)


def decomposed_log_likelihood(b: PathCoefficients, o: ErrorCovariance,
                              y, i: int) -> float:
    """Log-likelihood through its per-vertex decomposition.

    Splits the likelihood into the conditional piece of variable i
    (conditional error variance plus the squared distance of Y_i from
    its regression on parents and spouse pseudo-variables) and the
    marginal piece of the remaining residuals.  Equals
    ``log_likelihood`` with S = Y Y^t / n for every vertex i; kept as
    an independent identity check on the update objective.
    """
    yv = _data_values(y)
    g = b.graph
    g._check_vertex(i)
    p = g.n_vertices
    n = yv.shape[1]
    others = [v for v in range(p) if v != i]
    pa = sorted(g.parents(i))
    spo = sorted(g.spouses(i))

    eps = residuals(b, yv)
    eps_rest = eps[others]
    w = conditional_variance(o, i)

    pred = np.zeros(n)
    if pa:
        pred += b.values[i, pa] @ yv[pa]
    if spo:
        z = pseudo_variables(o, eps_rest, i)
        rows = [others.index(k) for k in spo]
        pred += o.values[i, spo] @ z[rows]
    dev = yv[i] - pred

    chol = _cho_block(o.values, others, i)
    logdet_rest = 2.0 * np.sum(np.log(np.diag(chol[0])))
    tr_rest = float(np.sum(scipy.linalg.cho_solve(chol, eps_rest) * eps_rest))
    return (-0.5 * n * np.log(w)
            - 0.5 * float(dev @ dev) / w
            - 0.5 * n * logdet_rest
            - 0.5 * tr_rest)
