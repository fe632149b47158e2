"""Exception hierarchy shared by all cisdag modules."""


class CisDagError(Exception):
    """Base class for every error raised by cisdag."""


class NotPositiveDefinite(CisDagError, ValueError):
    """A matrix that must be positive definite is not (a factorization pivot fell below tolerance)."""

    def __init__(self, message="matrix is not positive definite", pivot=None, index=None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class DimensionMismatch(CisDagError, ValueError):
    pass


class DimensionTooLarge(CisDagError, ValueError):
    """Raised by exhaustive enumerations when the problem exceeds the configured cap."""


class NotSymmetric(CisDagError, ValueError):
    pass


class CycleError(CisDagError, ValueError):
    def __init__(self, message="graph contains a directed cycle"):
        super().__init__(message)


class NoCandidate(CisDagError):
    """No variable passed the regression threshold during noisy ordering recovery.

    Attributes
    ----------
    step : int
        1-based step of the recovery loop at which the scan failed.
    best_margin : float
        Largest minimum regression coefficient among the scanned candidates.
    threshold : float
        The value ``-epsilon_n`` the margin had to exceed.
    """

    def __init__(self, step, best_margin, threshold, active=()):
        self.step = step
        self.best_margin = best_margin
        self.threshold = threshold
        self.active = tuple(active)
        super().__init__(
            f"no candidate at step {step}: best min coefficient {best_margin:.6g} "
            f"does not exceed {threshold:.6g}"
        )


class MleDoesNotExist(CisDagError):
    """A row of a Cholesky factor model is fitted exactly, so the likelihood is unbounded."""

    def __init__(self, row, residual_var):
        self.row = row
        self.residual_var = residual_var
        super().__init__(
            f"maximum likelihood estimate does not exist: variable {row} is fitted "
            f"exactly (residual variance {residual_var:.3g})"
        )


class MaxIterations(CisDagError, RuntimeError):
    pass
