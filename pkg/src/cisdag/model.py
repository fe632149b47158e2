"""Gaussian model objects: covariance/precision pairs and linear SEM parameters.

Conventions
-----------
Variables are labelled ``0 .. m-1``. A :class:`SemParams` stores the
coefficient matrix ``lam`` in these original labels, with ``lam[i, j]`` the
coefficient of ``X_j`` in the equation for ``X_i``; it may be nonzero only
when ``j`` precedes ``i`` in ``ordering``. ``noise_var`` holds the variances
of the noise terms, so

    K = (I - lam)^T diag(1 / noise_var) (I - lam).

The unit upper triangular factorization ``K = U diag(d) U^T`` of the
permuted precision uses the reciprocal quantities: ``d = 1 / noise_var``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionMismatch
from .matrix import (
    DEFAULT_TOL,
    Tolerance,
    as_ordering,
    as_symmetric,
    invert_spd,
    logdet_spd,
    permute_sym,
    udu_factor,
)

__all__ = [
    "CovariancePair",
    "SemParams",
    "as_dataset",
    "sem_to_precision",
    "precision_to_sem",
    "log_likelihood",
]


def as_dataset(data: ArrayLike, m: int | None = None) -> NDArray[np.float64]:
    """Validate an ``n x m`` observation matrix (rows are samples)."""
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d data matrix, got shape {X.shape}")
    if m is not None and X.shape[1] != m:
        raise DimensionMismatch(f"data has {X.shape[1]} columns, expected {m}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data has non-finite entries")
    return X


@dataclass(frozen=True, eq=False)
class CovariancePair:
    """A covariance matrix together with its inverse, the precision matrix.

    Build instances with :meth:`from_sigma` or :meth:`from_precision`; both
    check positive definiteness through the factorization pivots.
    """

    sigma: NDArray[np.float64]
    precision: NDArray[np.float64]

    @classmethod
    def from_sigma(cls, sigma: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> "CovariancePair":
        S = as_symmetric(sigma)
        return cls(_frozen(S), _frozen(invert_spd(S, tol)))

    @classmethod
    def from_precision(cls, precision: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> "CovariancePair":
        K = as_symmetric(precision)
        return cls(_frozen(invert_spd(K, tol)), _frozen(K))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def permuted(self, sigma: Sequence[int]) -> "CovariancePair":
        """The pair for the reordered vector ``(X[sigma[0]], ..., X[sigma[-1]])``."""
        return CovariancePair(_frozen(permute_sym(self.sigma, sigma)), _frozen(permute_sym(self.precision, sigma)))

    def marginal(self, keep: Sequence[int]) -> "CovariancePair":
        """Pair of the sub-vector ``X[keep]`` (in the given order)."""
        keep = [int(k) for k in keep]
        return CovariancePair.from_sigma(self.sigma[np.ix_(keep, keep)])


def _frozen(A: NDArray) -> NDArray:
    A = np.array(A, dtype=float)
    A.flags.writeable = False
    return A


@dataclass(frozen=True, eq=False)
class SemParams:
    """Parameters of a linear Gaussian structural equation model.

    ``X_i = mean_i + sum_j lam[i, j] X_j + eps_i`` with independent
    ``eps_i ~ N(0, noise_var[i])``. ``mean`` holds intercepts and is ignored by
    everything that only looks at the covariance.
    """

    ordering: tuple[int, ...]
    lam: NDArray[np.float64]
    noise_var: NDArray[np.float64]
    mean: NDArray[np.float64] = field(default=None)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        m = lam.shape[0]
        if lam.ndim != 2 or lam.shape != (m, m) or m < 1:
            raise DimensionMismatch(f"lambda must be square, got shape {lam.shape}")
        order = as_ordering(self.ordering, m)
        noise = np.array(self.noise_var, dtype=float).reshape(-1)
        if noise.shape != (m,):
            raise DimensionMismatch(f"noise_var must have length {m}")
        if not np.all(noise > 0):
            raise ValueError("noise variances must be strictly positive")
        mean = np.zeros(m) if self.mean is None else np.array(self.mean, dtype=float).reshape(-1)
        if mean.shape != (m,):
            raise DimensionMismatch(f"mean must have length {m}")
        # strictly lower triangular once conjugated by the ordering
        P = lam[np.ix_(order, order)]
        if np.any(np.triu(P) != 0):
            raise ValueError(f"lambda is not strictly lower triangular under ordering {order}")
        object.__setattr__(self, "ordering", order)
        object.__setattr__(self, "lam", _frozen(lam))
        object.__setattr__(self, "noise_var", _frozen(noise))
        object.__setattr__(self, "mean", _frozen(mean))

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    def edges(self) -> set[tuple[int, int]]:
        """Support of ``lam`` as directed edges ``j -> i``."""
        rows, cols = np.nonzero(self.lam)
        return {(int(j), int(i)) for i, j in zip(rows, cols)}

    def intercept_means(self) -> NDArray[np.float64]:
        """Marginal means ``(I - lam)^{-1} mean``."""
        return np.linalg.solve(np.eye(self.dim) - self.lam, self.mean)


def sem_to_precision(p: SemParams) -> CovariancePair:
    """Covariance pair implied by an SEM: ``K = (I - lam)^T D^{-1} (I - lam)``."""
    B = np.eye(p.dim) - p.lam
    K = (B.T / p.noise_var) @ B
    Binv = np.linalg.inv(B)
    S = (Binv * p.noise_var) @ Binv.T
    return CovariancePair(_frozen(0.5 * (S + S.T)), _frozen(0.5 * (K + K.T)))


def precision_to_sem(cp: CovariancePair, ordering: Sequence[int], tol: Tolerance = DEFAULT_TOL) -> SemParams:
    """The unique SEM with the given ordering that has precision ``cp.precision``.

    Factor the permuted precision as ``U diag(d) U^T``; then
    ``lam = (I - U)^T`` and ``noise_var = 1 / d`` in permuted coordinates.
    """
    order = as_ordering(ordering, cp.dim)
    U, d = udu_factor(permute_sym(cp.precision, order), tol)
    lam_perm = np.tril(-U.T, -1)
    m = cp.dim
    lam = np.zeros((m, m))
    idx = np.asarray(order)
    lam[np.ix_(idx, idx)] = lam_perm
    noise = np.empty(m)
    noise[idx] = 1.0 / d
    return SemParams(order, lam, noise)


def log_likelihood(K: ArrayLike, data: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> float:
    """Gaussian log-likelihood ``log det K - tr(X^T X K) / n`` (up to constants and a factor n/2).

    The data are used as given; center them first for the zero-mean model.
    """
    A = as_symmetric(K)
    X = as_dataset(data, A.shape[0])
    n = X.shape[0]
    return logdet_spd(A, tol) - float(np.sum((X @ A) * X)) / n
