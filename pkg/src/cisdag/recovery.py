"""Recovering a CIS ordering from a population covariance or from samples.

Both procedures build the ordering from the back. At every step they look for
a variable that can be positively regressed on all remaining variables, place
it last among them, and marginalize it out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DimensionMismatch, NoCandidate
from .matrix import DEFAULT_TOL, Tolerance, invert_spd, is_nonpositive, marginal_precision
from .model import CovariancePair, as_dataset
from .positivity import row_is_nonpositive

__all__ = [
    "TieBreak",
    "RecoveryConfig",
    "RegressionCoefficients",
    "RecoveryStep",
    "default_epsilon",
    "find_cis_ordering_population",
    "population_regression",
    "sample_regression",
    "find_cis_ordering_noisy",
    "noisy_recovery_steps",
]


class TieBreak(enum.Enum):
    FIRST_INDEX = "first"
    MAX_MIN_COEFFICIENT = "maxmin"


def default_epsilon(n: int, scale: float = 0.5) -> float:
    """``scale * n ** (-1/4)``: tends to zero while ``sqrt(n) * eps`` diverges."""
    return scale * n ** -0.25


@dataclass(frozen=True)
class RecoveryConfig:
    tol: Tolerance = DEFAULT_TOL
    epsilon_schedule: Callable[[int], float] = default_epsilon
    tie_break: TieBreak = TieBreak.FIRST_INDEX

    @classmethod
    def with_scale(cls, scale: float, **kwargs) -> "RecoveryConfig":
        if not scale > 0:
            raise ValueError("epsilon scale must be positive")
        return cls(epsilon_schedule=lambda n: default_epsilon(n, scale), **kwargs)

    def epsilon(self, n: int) -> float:
        eps = float(self.epsilon_schedule(n))
        if not eps > 0:
            raise ValueError(f"epsilon schedule returned {eps} for n={n}; it must be positive")
        return eps


@dataclass(frozen=True)
class RegressionCoefficients:
    """Coefficients of the regression of variable ``target`` on ``conditioning_set``."""

    target: int
    conditioning_set: tuple[int, ...]
    beta: NDArray[np.float64]

    def __post_init__(self):
        if not self.conditioning_set:
            raise ValueError("conditioning set must be non-empty")
        if self.target in self.conditioning_set:
            raise ValueError("conditioning set must exclude the target")

    @property
    def min_coefficient(self) -> float:
        return float(np.min(self.beta))


def _check_regression_indices(m: int, i: int, A: Sequence[int]) -> tuple[int, ...]:
    A = tuple(int(a) for a in A)
    if not A:
        raise ValueError("conditioning set must be non-empty")
    if i in A or len(set(A)) != len(A):
        raise ValueError("conditioning set must be distinct indices excluding the target")
    if not all(0 <= a < m for a in A + (i,)):
        raise DimensionMismatch(f"indices out of range for dimension {m}")
    return A


def population_regression(cp: CovariancePair, i: int, A: Sequence[int]) -> RegressionCoefficients:
    """Exact coefficients ``Sigma[i, A] @ inv(Sigma[A, A])``."""
    A = _check_regression_indices(cp.dim, i, A)
    S = cp.sigma
    beta = invert_spd(S[np.ix_(A, A)]) @ S[list(A), i]
    return RegressionCoefficients(i, A, beta)


def sample_regression(data: ArrayLike, i: int, A: Sequence[int]) -> RegressionCoefficients:
    """Least squares coefficients of column ``i`` on the columns ``A``.

    No intercept is fitted. Rank-deficient designs get the minimum-norm
    solution.
    """
    X = as_dataset(data)
    A = _check_regression_indices(X.shape[1], i, A)
    beta, *_ = np.linalg.lstsq(X[:, list(A)], X[:, i], rcond=None)
    return RegressionCoefficients(i, A, beta)


def find_cis_ordering_population(
    cp: CovariancePair, cfg: RecoveryConfig | None = None
) -> tuple[int, ...] | None:
    """Find one CIS ordering from the population precision, or ``None`` if none exists.

    With ``FIRST_INDEX`` the smallest admissible label is placed last at each
    step; the final two variables are placed in ascending order.
    ``MAX_MIN_COEFFICIENT`` picks the candidate whose smallest regression
    coefficient ``-K[j, k] / K[j, j]`` is largest.
    """
    cfg = cfg or RecoveryConfig()
    tol = cfg.tol
    K = np.array(cp.precision)
    labels = list(range(cp.dim))
    tail: list[int] = []
    while len(labels) > 2:
        candidates = [k for k in range(len(labels)) if row_is_nonpositive(K, k, tol)]
        if not candidates:
            return None
        if cfg.tie_break is TieBreak.MAX_MIN_COEFFICIENT:
            k = max(candidates, key=lambda c: (_min_population_coef(K, c), -c))
        else:
            k = candidates[0]
        tail.append(labels.pop(k))
        K = marginal_precision(K, k)
    if len(labels) == 2 and not is_nonpositive(K[0, 1], K[0, 0], K[1, 1], tol):
        return None
    return tuple(labels + tail[::-1])


def _min_population_coef(K: NDArray, k: int) -> float:
    row = np.delete(K[k], k)
    return float(np.min(-row / K[k, k]))


@dataclass(frozen=True)
class RecoveryStep:
    """One step of noisy recovery: the chosen variable and its smallest coefficient."""

    step: int
    chosen: int
    min_coefficient: float
    threshold: float
    active: tuple[int, ...] = field(default=())

    @property
    def margin(self) -> float:
        return self.min_coefficient - self.threshold


def noisy_recovery_steps(
    data: ArrayLike, cfg: RecoveryConfig | None = None
) -> tuple[tuple[int, ...], list[RecoveryStep]]:
    """Thresholded-regression ordering recovery, returning the per-step trace.

    Columns are centered first. At step ``t = 1 .. m-2`` every active
    variable is regressed on the other active variables; a variable is
    accepted when all its coefficients exceed ``-epsilon_n`` and it is then
    placed at the last free position. The final two variables are placed in
    ascending order.

    Raises
    ------
    NoCandidate
        If at some step no active variable passes the threshold.
    """
    cfg = cfg or RecoveryConfig()
    X = as_dataset(data)
    n, m = X.shape
    if n < m:
        raise DimensionMismatch(f"need at least as many samples as variables (n={n}, m={m})")
    X = X - X.mean(axis=0)
    eps = cfg.epsilon(n)
    active = list(range(m))
    tail: list[int] = []
    steps: list[RecoveryStep] = []
    for t in range(1, m - 1):
        best_i, best_min = None, -np.inf
        for i in active:
            rest = [a for a in active if a != i]
            coef = sample_regression(X, i, rest).min_coefficient
            if cfg.tie_break is TieBreak.FIRST_INDEX and coef > -eps:
                best_i, best_min = i, coef
                break
            if coef > best_min:
                best_i, best_min = i, coef
        if best_i is None or not best_min > -eps:
            raise NoCandidate(t, best_min, -eps, active)
        steps.append(RecoveryStep(t, best_i, best_min, -eps, tuple(active)))
        active.remove(best_i)
        tail.append(best_i)
    return tuple(sorted(active) + tail[::-1]), steps


def find_cis_ordering_noisy(data: ArrayLike, cfg: RecoveryConfig | None = None) -> tuple[int, ...]:
    """Estimate a CIS ordering from an ``n x m`` sample; see :func:`noisy_recovery_steps`."""
    ordering, _ = noisy_recovery_steps(data, cfg)
    return ordering
