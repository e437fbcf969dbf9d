# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of one fitting cycle.

Mirrors ``cycle_py.run_cycle`` step for step; LAPACK does the small
factorizations and plain C loops do the gathers and products, which is
where the pure numpy version loses time on call overhead.  Square
scratch buffers are addressed column-major (LAPACK convention) with a
fixed leading dimension p; the residual-row buffer ``y`` is row-major.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dposv, dpotrf, dpotri

from ricf.errors import NotPositiveDefiniteError, RankDeficiencyError

cnp.import_array()


def run_cycle(double[:, ::1] s, double[:, ::1] b, double[:, ::1] om, plan):
    """Update every vertex in the plan once, in place; returns the max
    absolute parameter change."""
    cdef cnp.int32_t[::1] verts = plan.verts
    cdef cnp.int32_t[::1] pa_off = plan.pa_off
    cdef cnp.int32_t[::1] pa_flat = plan.pa_flat
    cdef cnp.int32_t[::1] spo_off = plan.spo_off
    cdef cnp.int32_t[::1] spo_flat = plan.spo_flat
    cdef cnp.int32_t[::1] dis_off = plan.dis_off
    cdef cnp.int32_t[::1] dis_flat = plan.dis_flat
    cdef cnp.int32_t[::1] kpos_flat = plan.kpos_flat
    cdef cnp.int32_t[::1] allpa_off = plan.allpa_off
    cdef cnp.int32_t[::1] allpa_flat = plan.allpa_flat

    cdef int p = s.shape[0]
    cdef double[::1] w = np.empty(p * p)
    cdef double[::1] y = np.empty(p * p)
    cdef double[::1] mm_ = np.empty(p * p)
    cdef double[::1] t1 = np.empty(p * p)
    cdef double[::1] zz = np.empty(p * p)
    cdef double[::1] gram = np.empty(p * p)
    cdef double[::1] epsi = np.empty(p)
    cdef double[::1] zr = np.empty(p)
    cdef double[::1] rhs = np.empty(p)
    cdef double[::1] x = np.empty(p)

    cdef double delta = 0.0, acc, coef, rss, qf, newv, diff
    cdef double done = 1.0, dzero = 0.0
    cdef int t, i, npar, nk, d, pbase, kbase, dbase
    cdef int a, c, r, k, q, tp, sk, sk2, kc, kc2, jc, dd, dc, dr, pr, m, info, one = 1
    cdef char lo = b'L', no = b'N'

    for t in range(verts.shape[0]):
        i = verts[t]
        pbase = pa_off[t]
        npar = pa_off[t + 1] - pbase
        kbase = spo_off[t]
        nk = spo_off[t + 1] - kbase
        dbase = dis_off[t]
        d = dis_off[t + 1] - dbase

        if nk == 0:
            if npar == 0:
                newv = s[i, i]
                diff = fabs(om[i, i] - newv)
                if diff > delta:
                    delta = diff
                om[i, i] = newv
                continue
            for c in range(npar):
                jc = pa_flat[pbase + c]
                rhs[c] = s[jc, i]
                x[c] = rhs[c]
                for r in range(npar):
                    gram[c * p + r] = s[pa_flat[pbase + r], jc]
            dposv(&lo, &npar, &one, &gram[0], &p, &x[0], &p, &info)
            if info != 0:
                _raise_rank(i, info, plan, t)
            rss = s[i, i]
            for c in range(npar):
                rss -= x[c] * rhs[c]
            if rss <= 0.0:
                raise NotPositiveDefiniteError(
                    f"nonpositive residual variance at vertex {i}")
            for c in range(npar):
                jc = pa_flat[pbase + c]
                diff = fabs(b[i, jc] - x[c])
                if diff > delta:
                    delta = diff
                b[i, jc] = x[c]
            diff = fabs(om[i, i] - rss)
            if diff > delta:
                delta = diff
            om[i, i] = rss
            continue

        # W = inverse of Om[D, D]
        for c in range(d):
            dc = dis_flat[dbase + c]
            for r in range(d):
                w[c * p + r] = om[dis_flat[dbase + r], dc]
        dpotrf(&lo, &d, &w[0], &p, &info)
        if info != 0:
            raise NotPositiveDefiniteError(
                f"error covariance block for vertex {i} is not positive "
                "definite")
        dpotri(&lo, &d, &w[0], &p, &info)
        if info != 0:
            raise NotPositiveDefiniteError(
                f"error covariance block for vertex {i} is singular")
        for c in range(d):
            for r in range(c + 1, d):
                w[r * p + c] = w[c * p + r]

        # y[a, :] = (B S) over the rows of D, accumulated over parents
        for a in range(d):
            dd = dis_flat[dbase + a]
            for q in range(p):
                y[a * p + q] = 0.0
            for tp in range(allpa_off[dd], allpa_off[dd + 1]):
                q = allpa_flat[tp]
                coef = b[dd, q]
                for c in range(p):
                    y[a * p + c] += coef * s[q, c]

        # mm_ = ((I-B) S (I-B)^t)[D, D]
        for c in range(d):
            dc = dis_flat[dbase + c]
            for r in range(d):
                dr = dis_flat[dbase + r]
                mm_[c * p + r] = s[dr, dc] - y[r * p + dc] - y[c * p + dr]
            for tp in range(allpa_off[dc], allpa_off[dc + 1]):
                q = allpa_flat[tp]
                coef = b[dc, q]
                for r in range(d):
                    mm_[c * p + r] += y[r * p + q] * coef

        # epsi = ((I-B) S)[D, i];  zr = W epsi
        for r in range(d):
            epsi[r] = s[dis_flat[dbase + r], i] - y[r * p + i]
        for r in range(d):
            acc = 0.0
            for c in range(d):
                acc += w[c * p + r] * epsi[c]
            zr[r] = acc

        # zz = W mm_ W (all buffers column-major with leading dimension p)
        dgemm(&no, &no, &d, &d, &d, &done, &mm_[0], &p, &w[0], &p,
              &dzero, &t1[0], &p)
        dgemm(&no, &no, &d, &d, &d, &done, &w[0], &p, &t1[0], &p,
              &dzero, &zz[0], &p)

        # normal equations over [parents | spouse pseudo-variables]
        for c in range(npar):
            jc = pa_flat[pbase + c]
            rhs[c] = s[jc, i]
            for r in range(npar):
                gram[c * p + r] = s[pa_flat[pbase + r], jc]
        for sk in range(nk):
            kc = kpos_flat[kbase + sk]
            for r in range(npar):
                pr = pa_flat[pbase + r]
                acc = 0.0
                for a in range(d):
                    acc += (s[dis_flat[dbase + a], pr] - y[a * p + pr]) \
                        * w[kc * p + a]
                gram[(npar + sk) * p + r] = acc
                gram[r * p + npar + sk] = acc
            for sk2 in range(nk):
                kc2 = kpos_flat[kbase + sk2]
                gram[(npar + sk) * p + npar + sk2] = zz[kc * p + kc2]
            rhs[npar + sk] = zr[kc]

        m = npar + nk
        for c in range(m):
            x[c] = rhs[c]
        dposv(&lo, &m, &one, &gram[0], &p, &x[0], &p, &info)
        if info != 0:
            _raise_rank(i, info, plan, t)

        rss = s[i, i]
        for c in range(m):
            rss -= x[c] * rhs[c]
        if rss <= 0.0:
            raise NotPositiveDefiniteError(
                f"nonpositive conditional variance at vertex {i}")
        qf = 0.0
        for sk in range(nk):
            kc = kpos_flat[kbase + sk]
            for sk2 in range(nk):
                kc2 = kpos_flat[kbase + sk2]
                qf += x[npar + sk] * w[kc2 * p + kc] * x[npar + sk2]
        newv = rss + qf

        for c in range(npar):
            jc = pa_flat[pbase + c]
            diff = fabs(b[i, jc] - x[c])
            if diff > delta:
                delta = diff
            b[i, jc] = x[c]
        for sk in range(nk):
            k = spo_flat[kbase + sk]
            diff = fabs(om[i, k] - x[npar + sk])
            if diff > delta:
                delta = diff
            om[i, k] = x[npar + sk]
            om[k, i] = x[npar + sk]
        diff = fabs(om[i, i] - newv)
        if diff > delta:
            delta = diff
        om[i, i] = newv

    return delta


def _raise_rank(int vertex, int info, plan, int t):
    i, pa, spo, _, _ = plan.vertices[t]
    labels = [f"Y[{j}]" for j in pa] + [f"Z[{k}]" for k in spo]
    col = labels[info - 1] if 0 < info <= len(labels) else "?"
    raise RankDeficiencyError(
        f"regressors for vertex {vertex} are linearly dependent at {col}",
        columns=[col])
