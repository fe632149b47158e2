"""Maximum likelihood estimation in Cholesky factor models.

The likelihood separates over the rows of the coefficient matrix: once the
data are arranged in the working ordering, row ``i`` is the (constrained)
least squares regression of column ``i`` on the preceding columns, and the
optimal noise precision is ``n / ||residual||^2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .dag import Dag
from .exceptions import DimensionMismatch, MaxIterations, MleDoesNotExist
from .matrix import Tolerance, as_ordering
from .model import SemParams, as_dataset

__all__ = [
    "ConstraintKind",
    "RowConstraint",
    "MleFit",
    "NNLS_TOL",
    "solve_nnls",
    "fit",
    "mle_exists",
    "constraints_from_dag",
]

NNLS_TOL = Tolerance(abs=1e-10, rel=1e-12)
# residual variance at or below this fraction of the column variance counts as an exact fit
EXACT_FIT_RATIO = 1e-12


class ConstraintKind(enum.Enum):
    FREE = "free"
    NONNEGATIVE = "nonnegative"
    SUPPORT = "support"
    NONNEGATIVE_SUPPORT = "nonnegative_support"


@dataclass(frozen=True)
class RowConstraint:
    """Constraint set for one row of the coefficient matrix.

    ``support`` (original variable labels) restricts which predecessors may
    have nonzero coefficients; ``None`` means all predecessors.
    """

    kind: ConstraintKind = ConstraintKind.FREE
    support: frozenset[int] | None = None

    def __post_init__(self):
        restricted = self.kind in (ConstraintKind.SUPPORT, ConstraintKind.NONNEGATIVE_SUPPORT)
        if restricted and self.support is None:
            raise ValueError(f"{self.kind.value} constraint needs a support set")
        if not restricted and self.support is not None:
            raise ValueError(f"{self.kind.value} constraint takes no support set")
        if self.support is not None:
            object.__setattr__(self, "support", frozenset(int(s) for s in self.support))

    @property
    def nonnegative(self) -> bool:
        return self.kind in (ConstraintKind.NONNEGATIVE, ConstraintKind.NONNEGATIVE_SUPPORT)

    @classmethod
    def free(cls):
        return cls(ConstraintKind.FREE)

    @classmethod
    def nonneg(cls):
        return cls(ConstraintKind.NONNEGATIVE)

    @classmethod
    def on_support(cls, support: Iterable[int], nonnegative: bool = False):
        kind = ConstraintKind.NONNEGATIVE_SUPPORT if nonnegative else ConstraintKind.SUPPORT
        return cls(kind, frozenset(support))


def constraints_from_dag(dag: Dag, ordering: Sequence[int], nonnegative: bool = False) -> list[RowConstraint]:
    """Row constraints of the DAG model (parents as support) for a topological ordering."""
    order = as_ordering(ordering, dag.m)
    if not dag.is_topological(order):
        raise ValueError(f"ordering {order} is not topological for the DAG")
    return [RowConstraint.on_support(dag.parents(v), nonnegative) for v in order[1:]]


def solve_nnls(
    Z: ArrayLike, y: ArrayLike, tol: Tolerance = NNLS_TOL, max_iter: int | None = None
) -> NDArray[np.float64]:
    """Minimize ``||y - Z b||`` subject to ``b >= 0`` (Lawson-Hanson active set).

    Parameters
    ----------
    Z : array_like, shape (n, k)
    y : array_like, shape (n,)
    tol : Tolerance
        Dual feasibility threshold: the loop stops once every gradient
        component ``Z^T (y - Z b)`` of a zero variable is at most
        ``tol.abs + tol.rel * ||Z||_F * ||y||``.
    max_iter : int, optional
        Bound on outer iterations, default ``3 * k + 10``.

    Returns
    -------
    ndarray, shape (k,)

    Raises
    ------
    MaxIterations
        If the active set loop does not terminate.

    Notes
    -----
    A variable whose entry into the passive set is immediately undone (zero
    step length, which happens under degeneracy or rounding) is blocked until
    the iterate moves. This prevents the add/remove cycle of the textbook loop.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"Z has shape {Z.shape}, y has length {y.shape[0]}")
    n, k = Z.shape
    x = np.zeros(k)
    if k == 0:
        return x
    max_iter = 3 * k + 10 if max_iter is None else max_iter
    dual_tol = tol.threshold(float(np.linalg.norm(Z) * np.linalg.norm(y)))
    passive = np.zeros(k, dtype=bool)
    blocked = np.zeros(k, dtype=bool)
    w = Z.T @ (y - Z @ x)

    for _ in range(max_iter):
        free = ~passive & ~blocked & (w > dual_tol)
        if not free.any():
            return x
        j = int(np.argmax(np.where(free, w, -np.inf)))
        passive[j] = True
        moved = False
        while True:
            s = np.zeros(k)
            s[passive], *_ = np.linalg.lstsq(Z[:, passive], y, rcond=None)
            if np.all(s[passive] > 0):
                x = s
                moved = True
                break
            bad = passive & (s <= 0)
            denom = x[bad] - s[bad]
            ratios = np.divide(x[bad], denom, out=np.zeros_like(denom), where=denom > 0)
            alpha = float(np.min(ratios))
            if alpha > 0:
                moved = True
            x = x + alpha * (s - x)
            passive &= x > 0
            x[~passive] = 0.0
        if moved:
            blocked[:] = False
        else:
            blocked[j] = True
        w = Z.T @ (y - Z @ x)
    raise MaxIterations(f"NNLS did not converge within {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class MleFit:
    """Result of :func:`fit`.

    ``sem.noise_var`` holds the fitted residual variances ``||r_i||^2 / n``;
    :attr:`precision_diag` gives their reciprocals, the diagonal matrix of the
    factorization ``K = U D U^T``.
    """

    sem: SemParams
    loglik: float
    residual_norms: NDArray[np.float64]
    n: int
    exists: bool = True

    @property
    def lam(self) -> NDArray[np.float64]:
        return self.sem.lam

    @property
    def precision_diag(self) -> NDArray[np.float64]:
        return 1.0 / self.sem.noise_var


def _row_problems(m: int, order: tuple[int, ...], constraints: Sequence[RowConstraint] | None):
    if constraints is None:
        constraints = [RowConstraint.free()] * (m - 1)
    constraints = list(constraints)
    if len(constraints) != m - 1:
        raise DimensionMismatch(f"expected {m - 1} row constraints, got {len(constraints)}")
    rows = [(order[0], (), False)]
    for pos in range(1, m):
        c = constraints[pos - 1]
        preceding = order[:pos]
        if c.support is None:
            regressors = preceding
        else:
            if not c.support <= set(preceding):
                raise ValueError(
                    f"support {sorted(c.support)} for variable {order[pos]} contains non-preceding variables"
                )
            regressors = tuple(v for v in preceding if v in c.support)
        rows.append((order[pos], regressors, c.nonnegative))
    return rows


def _fit_rows(X: NDArray, order, constraints, tol: Tolerance):
    n, m = X.shape
    lam = np.zeros((m, m))
    resid_sq = np.zeros(m)
    exact = []
    for target, regressors, nonneg in _row_problems(m, order, constraints):
        xi = X[:, target]
        if regressors:
            Zi = X[:, list(regressors)]
            if nonneg:
                beta = solve_nnls(Zi, xi, tol)
            else:
                beta, *_ = np.linalg.lstsq(Zi, xi, rcond=None)
            lam[target, list(regressors)] = beta
            r = xi - Zi @ beta
        else:
            r = xi
        resid_sq[target] = float(r @ r)
        if resid_sq[target] / n <= EXACT_FIT_RATIO * float(xi @ xi) / n:
            exact.append(target)
    return lam, resid_sq, exact


def fit(
    data: ArrayLike,
    ordering: Sequence[int] | None = None,
    constraints: Sequence[RowConstraint] | None = None,
    tol: Tolerance = NNLS_TOL,
) -> MleFit:
    """Maximum likelihood fit of a Cholesky factor model.

    Parameters
    ----------
    data : array_like, shape (n, m)
        Observations; columns are centered before fitting.
    ordering : sequence of int, optional
        Working ordering (0-based labels); identity by default.
    constraints : sequence of RowConstraint, optional
        One constraint per variable after the first in ``ordering``
        (length ``m - 1``). Defaults to all :attr:`ConstraintKind.FREE`.

    Returns
    -------
    MleFit
        Fitted SEM with intercepts chosen so that the model mean equals the
        sample mean.

    Raises
    ------
    MleDoesNotExist
        If some variable is reproduced exactly by its admissible regression.
    """
    X = as_dataset(data)
    n, m = X.shape
    order = tuple(range(m)) if ordering is None else as_ordering(ordering, m)
    means = X.mean(axis=0)
    Xc = X - means
    lam, resid_sq, exact = _fit_rows(Xc, order, constraints, tol)
    if exact:
        raise MleDoesNotExist(exact[0], resid_sq[exact[0]] / n)
    noise = resid_sq / n
    intercepts = means - lam @ means
    sem = SemParams(order, lam, noise, intercepts)
    loglik = -float(np.sum(np.log(noise))) - m
    return MleFit(sem, loglik, np.sqrt(resid_sq), n)


def mle_exists(
    data: ArrayLike,
    ordering: Sequence[int] | None = None,
    constraints: Sequence[RowConstraint] | None = None,
    tol: Tolerance = NNLS_TOL,
) -> bool:
    """Whether the MLE of the Cholesky factor model exists for these data."""
    X = as_dataset(data)
    n, m = X.shape
    order = tuple(range(m)) if ordering is None else as_ordering(ordering, m)
    _, _, exact = _fit_rows(X - X.mean(axis=0), order, constraints, tol)
    return not exact
