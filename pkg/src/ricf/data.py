"""Observation containers: raw data matrices and empirical covariances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataError, ShapeError

__all__ = ["DataMatrix", "EmpiricalCovariance", "empirical_covariance"]


@dataclass(frozen=True)
class DataMatrix:
    """Observations as a variables-by-samples matrix (one column per
    observation)."""

    values: np.ndarray

    def __init__(self, values):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2:
            raise ShapeError("data matrix must be 2-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ShapeError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def n_variables(self) -> int:
        return self.values.shape[0]

    @property
    def n_observations(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EmpiricalCovariance:
    """Empirical second-moment matrix S together with its sample size.

    ``centered`` records whether row means were subtracted before the
    cross product was formed.  The divisor is the sample size n in both
    cases (not n - 1).
    """

    values: np.ndarray
    n: int
    centered: bool = False

    def __init__(self, values, n, centered=False):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ShapeError("covariance must be square")
        if not np.allclose(vals, vals.T):
            raise ShapeError("covariance must be symmetric")
        if n < 1:
            raise ValueError("sample size must be positive")
        vals = 0.5 * (vals + vals.T)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "centered", bool(centered))

    @property
    def n_variables(self) -> int:
        return self.values.shape[0]


def empirical_covariance(y: DataMatrix | np.ndarray,
                         center: bool = False) -> EmpiricalCovariance:
    """S = Y Y^t / n, optionally after subtracting row means.

    The divisor stays n after centering; downstream code assumes this
    convention everywhere.
    """
    vals = y.values if isinstance(y, DataMatrix) else np.asarray(y, dtype=float)
    if vals.ndim != 2:
        raise ShapeError("data matrix must be 2-dimensional")
    n = vals.shape[1]
    if n == 0:
        raise EmptyDataError("data matrix has no observations")
    if center:
        vals = vals - vals.mean(axis=1, keepdims=True)
    s = (vals @ vals.T) / n
    return EmpiricalCovariance(0.5 * (s + s.T), n, centered=center)
