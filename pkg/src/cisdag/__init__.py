"""Positive DAG dependence (CIS) analysis for Gaussian models."""

__version__ = "0.1.0"

from .dag import (
    Dag,
    VStructure,
    cis_markov_class,
    covered_edges,
    forbidden_last_nodes,
    markov_class,
    markov_equivalent,
    topological_orderings,
    trivially_covered_edges,
    v_structures,
)
from .exceptions import (
    CisDagError,
    CycleError,
    DimensionMismatch,
    DimensionTooLarge,
    MaxIterations,
    MleDoesNotExist,
    NoCandidate,
    NotPositiveDefinite,
    NotSymmetric,
)
from .matrix import (
    DEFAULT_TOL,
    Tolerance,
    invert_spd,
    marginal_precision,
    permute_sym,
    udu_factor,
)
from .mle import ConstraintKind, MleFit, RowConstraint, constraints_from_dag, fit, mle_exists, solve_nnls
from .model import CovariancePair, SemParams, log_likelihood, precision_to_sem, sem_to_precision
from .positivity import (
    PositivityReport,
    enumerate_cis_orderings,
    is_cis,
    is_m_matrix,
    is_positively_associated,
    positivity_report,
)
from .recovery import (
    RecoveryConfig,
    RegressionCoefficients,
    TieBreak,
    find_cis_ordering_noisy,
    find_cis_ordering_population,
    population_regression,
    sample_regression,
)
from .simulate import SimSpec, random_cis_model, random_dag, random_positive_sem, sample_sem, split_seed
