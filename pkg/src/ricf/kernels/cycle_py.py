"""Pure numpy implementation of one fitting cycle.

Semantically identical to the compiled kernel in ``cycle_c.pyx``; this
is the fallback used when the extension is unavailable, and the
reference the extension is tested against.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import NotPositiveDefiniteError, RankDeficiencyError
from .plan import CyclePlan

__all__ = ["run_cycle"]


def _solve_gram(gram, rhs, vertex, pa, spo):
    try:
        chol = scipy.linalg.cho_factor(gram, lower=True)
    except scipy.linalg.LinAlgError:
        labels = [f"Y[{j}]" for j in pa] + [f"Z[{k}]" for k in spo]
        _, _, piv = scipy.linalg.qr(gram, pivoting=True)
        rank = np.linalg.matrix_rank(gram)
        dependent = [labels[t] for t in sorted(piv[rank:])]
        raise RankDeficiencyError(
            f"regressors for vertex {vertex} are linearly dependent: "
            + ", ".join(dependent), columns=dependent)
    return scipy.linalg.cho_solve(chol, rhs)


def update_vertex_from_cov(s, b, om, i, pa, spo, dis, kpos):
    """One vertex update on the current (B, Omega), in place.

    Returns the largest absolute change over the free parameters of the
    vertex row.
    """
    npar = pa.size
    if spo.size == 0:
        if npar:
            x = _solve_gram(s[np.ix_(pa, pa)], s[pa, i], i, pa, spo)
            rss = float(s[i, i] - x @ s[pa, i])
        else:
            x = np.empty(0)
            rss = float(s[i, i])
        if rss <= 0.0:
            raise NotPositiveDefiniteError(
                f"nonpositive residual variance at vertex {i}")
        delta = abs(om[i, i] - rss)
        if npar:
            delta = max(delta, float(np.max(np.abs(b[i, pa] - x))))
            b[i, pa] = x
        om[i, i] = rss
        return delta

    d = dis.size
    try:
        chol = scipy.linalg.cho_factor(om[np.ix_(dis, dis)], lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"error covariance block for vertex {i} is not positive "
            "definite") from exc
    w = scipy.linalg.cho_solve(chol, np.eye(d))

    bd = b[dis, :]
    y = bd @ s                                    # rows of (B S) over D
    m = s[np.ix_(dis, dis)] - y[:, dis] - y[:, dis].T + y @ bd.T
    eps_i = s[dis, i] - y[:, i]                   # ((I-B) S)[D, i]
    zr = w @ eps_i
    zz = w @ m @ w
    asp = s[np.ix_(dis, pa)] - y[:, pa]           # ((I-B) S)[D, P]
    cpk = asp.T @ w[:, kpos]

    mm = npar + spo.size
    gram = np.empty((mm, mm))
    gram[:npar, :npar] = s[np.ix_(pa, pa)]
    gram[:npar, npar:] = cpk
    gram[npar:, :npar] = cpk.T
    gram[npar:, npar:] = zz[np.ix_(kpos, kpos)]
    rhs = np.concatenate([s[pa, i], zr[kpos]])

    x = _solve_gram(gram, rhs, i, pa, spo)
    rss = float(s[i, i] - x @ rhs)
    if rss <= 0.0:
        raise NotPositiveDefiniteError(
            f"nonpositive conditional variance at vertex {i}")
    wk = x[npar:]
    omega_ii = rss + float(wk @ w[np.ix_(kpos, kpos)] @ wk)

    delta = abs(om[i, i] - omega_ii)
    if npar:
        delta = max(delta, float(np.max(np.abs(b[i, pa] - x[:npar]))))
        b[i, pa] = x[:npar]
    delta = max(delta, float(np.max(np.abs(om[i, spo] - wk))))
    om[i, spo] = wk
    om[spo, i] = wk
    om[i, i] = omega_ii
    return delta


def run_cycle(s: np.ndarray, b: np.ndarray, om: np.ndarray,
              plan: CyclePlan) -> float:
    """Update every vertex in the plan once; returns the max absolute
    parameter change over the cycle.  B and Omega are modified in place."""
    delta = 0.0
    for i, pa, spo, dis, kpos in plan.vertices:
        delta = max(delta, update_vertex_from_cov(s, b, om, i, pa, spo, dis, kpos))
    return delta
