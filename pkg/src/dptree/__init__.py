"""Differentially private subtree sums over a known rooted tree."""

from .baselines import gaussian_sigma, gaussian_tree, laplace_scale, laplace_tree
from .errors import (
    CycleError,
    DuplicateIdError,
    InputError,
    MalformedLineError,
    MultipleRootsError,
    NoRootError,
    PreconditionError,
    ResourceError,
    TreeAggError,
    UnknownNodeError,
)
from .hierarchy import (
    AccuracySpec,
    Labels,
    ScheduleParams,
    clamp_to_mrmse,
    classify_forest,
    classify_tree,
    closed_form_min_tau,
    certified_min_tau,
    estimate,
    estimate_clamped,
    reduce_estimate,
    required_tau_min,
    schedule_params,
)
from .noise import TruncLapParams, make_rng, sample_gaussian, sample_laplace, sample_trunc_laplace, trial_rng, trunc_lap_radius
from .privacy import BudgetLedger, PrivacyBudget, compose_basic, compose_parallel, group_privacy_factor
from .tree_core import (
    LeafCounts,
    NodeEstimates,
    NodeValues,
    NodeWeights,
    TreeShape,
    aggregate_exact,
    complete_binary,
    neighbor,
    nodes_at_depth,
    path_tree,
)

__version__ = "0.1.0"
