"""CIS, MTP2 and positive-association checks for Gaussian models.

A Gaussian vector is CIS under the ordering ``sigma`` exactly when, for every
position ``j``, the last row of the precision matrix of the marginal on
``sigma[:j+1]`` has nonpositive off-diagonal entries. With the factorization
``P = U diag(d) U^T`` of the permuted precision ``P``, that last row is
``d[j] * U[:j, j]``, so CIS is a sign pattern on ``U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionTooLarge, NotPositiveDefinite
from .matrix import (
    DEFAULT_TOL,
    Tolerance,
    as_ordering,
    as_symmetric,
    is_nonpositive,
    marginal_precision,
    permute_sym,
    udu_factor,
)
from .model import CovariancePair

__all__ = [
    "PositivityReport",
    "cis_entries",
    "is_cis",
    "is_m_matrix",
    "is_positively_associated",
    "enumerate_cis_orderings",
    "row_is_nonpositive",
    "positivity_report",
    "MAX_ENUMERATION_DIM",
]

MAX_ENUMERATION_DIM = 10


def cis_entries(cp: CovariancePair, sigma: Sequence[int], tol: Tolerance = DEFAULT_TOL):
    """Yield ``(earlier, later, value, threshold)`` for every CIS sign constraint.

    ``earlier`` and ``later`` are original variable labels with ``earlier``
    preceding ``later`` in ``sigma``. ``value`` is the off-diagonal entry
    ``d[j] * U[i, j]`` of the relevant marginal precision, and the constraint
    holds when ``value <= threshold``.
    """
    order = as_ordering(sigma, cp.dim)
    U, d = udu_factor(permute_sym(cp.precision, order), tol)
    m = len(order)
    # diagonal of the marginal precision on positions 0..j, accumulated column by column
    running = np.zeros(m)
    for j in range(m):
        running[: j + 1] += U[: j + 1, j] ** 2 * d[j]
        for i in range(j):
            value = d[j] * U[i, j]
            threshold = tol.threshold(float(np.sqrt(running[i] * d[j])))
            yield order[i], order[j], float(value), threshold


def is_cis(cp: CovariancePair, sigma: Sequence[int], tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the model is CIS under the ordering ``sigma`` (0-based labels)."""
    return all(value <= thr for _, _, value, thr in cis_entries(cp, sigma, tol))


def is_m_matrix(K: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``K`` is positive definite with nonpositive off-diagonal entries."""
    try:
        A = as_symmetric(K)
        udu_factor(A, tol)
    except (NotPositiveDefinite, ValueError):
        return False
    m = A.shape[0]
    return all(
        is_nonpositive(A[i, j], A[i, i], A[j, j], tol) for i in range(m) for j in range(i + 1, m)
    )


def is_positively_associated(sigma: ArrayLike, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Gaussian positive association: every covariance is nonnegative."""
    S = as_symmetric(sigma)
    m = S.shape[0]
    return all(
        is_nonpositive(-S[i, j], S[i, i], S[j, j], tol) for i in range(m) for j in range(i + 1, m)
    )


def row_is_nonpositive(K: NDArray, i: int, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether every off-diagonal entry in row ``i`` of ``K`` is nonpositive."""
    return all(
        is_nonpositive(K[i, j], K[i, i], K[j, j], tol) for j in range(K.shape[0]) if j != i
    )


def enumerate_cis_orderings(
    cp: CovariancePair, tol: Tolerance = DEFAULT_TOL, max_dim: int = MAX_ENUMERATION_DIM
) -> list[tuple[int, ...]]:
    """All CIS orderings of the model, by branch and prune over the last position.

    A variable may be placed last iff its row of the current precision is
    nonpositive off the diagonal; the remaining variables must then form a
    CIS ordering of the marginal, whose precision is a rank-one Schur
    downdate. Candidates for the last position are tried in ascending label
    order; for the final pair the ascending arrangement is emitted first.

    Raises
    ------
    DimensionTooLarge
        If ``cp.dim > max_dim``.
    """
    if cp.dim > max_dim:
        raise DimensionTooLarge(f"dimension {cp.dim} exceeds enumeration cap {max_dim}")
    K = np.array(cp.precision)
    return [tuple(o) for o in _enumerate(K, list(range(cp.dim)), tol)]


def _enumerate(K: NDArray, labels: list[int], tol: Tolerance) -> Iterator[list[int]]:
    if len(labels) == 1:
        yield [labels[0]]
        return
    if len(labels) == 2:
        if is_nonpositive(K[0, 1], K[0, 0], K[1, 1], tol):
            yield [labels[0], labels[1]]
            yield [labels[1], labels[0]]
        return
    for idx in range(len(labels)):
        if not row_is_nonpositive(K, idx, tol):
            continue
        rest = labels[:idx] + labels[idx + 1:]
        for prefix in _enumerate(marginal_precision(K, idx), rest, tol):
            yield prefix + [labels[idx]]


@dataclass
class PositivityReport:
    """Summary of the positivity properties of one model under one ordering.

    ``violating_entries`` lists ``(earlier, later, value)`` for CIS
    constraints that fail, with ``value`` the offending marginal-precision
    entry. Constraints that hold only within tolerance of zero are listed as
    well, with ``value`` exactly ``0.0``, to flag a boundary model.
    """

    ordering: tuple[int, ...]
    is_cis_under_given_ordering: bool
    is_mtp2: bool
    is_positively_associated: bool
    violating_entries: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self, one_based: bool = True) -> dict:
        off = 1 if one_based else 0
        return {
            "ordering": [s + off for s in self.ordering],
            "is_cis": self.is_cis_under_given_ordering,
            "is_mtp2": self.is_mtp2,
            "is_positively_associated": self.is_positively_associated,
            "violating_entries": [[i + off, j + off, v] for i, j, v in self.violating_entries],
        }


def positivity_report(
    cp: CovariancePair, sigma: Sequence[int] | None = None, tol: Tolerance = DEFAULT_TOL
) -> PositivityReport:
    order = tuple(range(cp.dim)) if sigma is None else as_ordering(sigma, cp.dim)
    cis = True
    entries = []
    for i, j, value, thr in cis_entries(cp, order, tol):
        if value > thr:
            cis = False
            entries.append((i, j, value))
        elif abs(value) <= thr:
            entries.append((i, j, 0.0))
    return PositivityReport(
        ordering=order,
        is_cis_under_given_ordering=cis,
        is_mtp2=is_m_matrix(cp.precision, tol),
        is_positively_associated=is_positively_associated(cp.sigma, tol),
        violating_entries=entries,
    )
