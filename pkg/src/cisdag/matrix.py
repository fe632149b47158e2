"""Dense symmetric linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays. Functions that require symmetric input
call :func:`as_symmetric`, which validates and then symmetrizes exactly, so
downstream code may rely on ``M[i, j] == M[j, i]`` bit for bit.

The central factorization is the "reversed" Cholesky decomposition
``K = U diag(d) U^T`` with ``U`` unit upper triangular. It is computed by
eliminating from the last row and column upward, which is what makes the
signs of ``U`` directly interpretable as regression coefficients under the
given variable order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular

from .exceptions import DimensionMismatch, NotPositiveDefinite, NotSymmetric

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "as_symmetric",
    "as_ordering",
    "inverse_permutation",
    "udu_factor",
    "udu_reconstruct",
    "invert_spd",
    "logdet_spd",
    "marginal_precision",
    "permute_sym",
    "is_nonpositive",
]


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative thresholds for floating point sign and pivot tests.

    An off-diagonal value ``v`` tied to diagonal entries ``a`` and ``b`` counts
    as nonpositive when ``v <= abs + rel * sqrt(a * b)``; see
    :func:`is_nonpositive`. Scaling by the diagonals makes the test invariant
    under rescaling of individual variables.
    """

    abs: float = 1e-12
    rel: float = 1e-9

    def __post_init__(self):
        if not (self.abs >= 0 and self.rel >= 0):
            raise ValueError(f"tolerances must be nonnegative, got abs={self.abs}, rel={self.rel}")
        if self.abs == 0 and self.rel == 0:
            raise ValueError("at least one of abs and rel must be positive")

    def threshold(self, scale: float = 1.0) -> float:
        return self.abs + self.rel * scale


DEFAULT_TOL = Tolerance()


def is_nonpositive(value: float, diag_a: float, diag_b: float, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Scale-aware test ``value <= 0`` for an off-diagonal entry."""
    return value <= tol.threshold(math.sqrt(abs(diag_a * diag_b)))


def as_symmetric(M: ArrayLike, *, rtol: float = 1e-10, atol: float = 1e-12) -> NDArray[np.float64]:
    """Return a float copy of ``M`` that is exactly symmetric.

    Raises
    ------
    DimensionMismatch
        If ``M`` is not a non-empty square matrix.
    NotSymmetric
        If ``M`` and ``M.T`` differ beyond ``atol + rtol * max|M|``.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if np.max(np.abs(A - A.T)) > atol + rtol * scale:
        raise NotSymmetric("matrix is not symmetric")
    return 0.5 * (A + A.T)


def as_ordering(sigma: Sequence[int], m: int) -> tuple[int, ...]:
    """Validate a 0-based permutation of ``range(m)`` given in one-line notation."""
    perm = tuple(int(s) for s in sigma)
    if len(perm) != m or sorted(perm) != list(range(m)):
        raise DimensionMismatch(f"{perm} is not a permutation of range({m})")
    return perm


def inverse_permutation(sigma: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(sigma)
    for pos, s in enumerate(sigma):
        inv[s] = pos
    return tuple(inv)


def udu_factor(K: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Factor a positive definite matrix as ``K = U diag(d) U^T``.

    ``U`` is unit upper triangular and ``d`` strictly positive. Elimination
    runs from the last index to the first, so ``U[:j, j] * d[j]`` is the last
    row of the inverse of the leading ``(j+1) x (j+1)`` block of ``K^{-1}``.

    Parameters
    ----------
    K : array_like, shape (m, m)
        Symmetric matrix.
    tol : Tolerance
        A pivot ``d[j] <= tol.abs`` is treated as a failure of positive
        definiteness.

    Returns
    -------
    U : ndarray, shape (m, m)
    d : ndarray, shape (m,)

    Raises
    ------
    NotPositiveDefinite
        With ``index`` set to the offending pivot.
    """
    A = as_symmetric(K)
    m = A.shape[0]
    U = np.eye(m)
    d = np.zeros(m)
    for j in range(m - 1, -1, -1):
        tail = U[j, j + 1:] * d[j + 1:]
        pivot = A[j, j] - float(U[j, j + 1:] @ tail)
        if not pivot > tol.abs:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3g} at index {j} is not positive", pivot=pivot, index=j
            )
        d[j] = pivot
        if j:
            U[:j, j] = (A[:j, j] - U[:j, j + 1:] @ tail) / pivot
    return U, d


def udu_reconstruct(U: NDArray, d: NDArray) -> NDArray[np.float64]:
    return (U * d) @ U.T


def invert_spd(M: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> NDArray[np.float64]:
    """Inverse of a symmetric positive definite matrix via its UDU factorization."""
    U, d = udu_factor(M, tol)
    W = solve_triangular(U, np.eye(U.shape[0]), lower=False, unit_diagonal=True)
    inv = (W.T / d) @ W
    return 0.5 * (inv + inv.T)


def logdet_spd(M: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> float:
    """``log det M`` as the sum of log pivots."""
    _, d = udu_factor(M, tol)
    return float(np.sum(np.log(d)))


def marginal_precision(K: ArrayLike, drop: int) -> NDArray[np.float64]:
    """Precision matrix of the marginal obtained by deleting variable ``drop``.

    Uses the rank-one Schur complement
    ``K[r, r] - K[r, drop] K[drop, r] / K[drop, drop]``, which equals
    ``inv(inv(K)[r, r])`` for the remaining indices ``r``.
    """
    A = as_symmetric(K)
    m = A.shape[0]
    if not 0 <= drop < m:
        raise DimensionMismatch(f"index {drop} out of range for dimension {m}")
    pivot = A[drop, drop]
    if not pivot > 0:
        raise NotPositiveDefinite(f"diagonal entry {pivot:.3g} at {drop} is not positive", pivot=pivot, index=drop)
    keep = [i for i in range(m) if i != drop]
    col = A[keep, drop]
    out = A[np.ix_(keep, keep)] - np.outer(col, col) / pivot
    return 0.5 * (out + out.T)


def permute_sym(M: ArrayLike, sigma: Sequence[int]) -> NDArray[np.float64]:
    """Return ``P`` with ``P[i, j] = M[sigma[i], sigma[j]]``."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    perm = as_ordering(sigma, A.shape[0])
    return A[np.ix_(perm, perm)].copy()
