"""scikit-learn style wrappers around the release mechanisms.

``X`` holds one dataset per row: shape ``(n_datasets, n_leaves)`` with leaf
columns ordered as ``tree.leaf_ids``.  ``transform`` returns one release per
row, shape ``(n_datasets, n_nodes)`` with columns ordered as ``tree.ids``.
Row ``k`` is released with ``trial_rng(random_state, k)``.

Without an explicit ``tree`` the complete binary tree with ``n_leaves``
leaves is used (``n_leaves`` must be a power of two).
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import baselines, hierarchy
from .errors import InputError, PreconditionError
from .noise import trial_rng
from .tree_core import LeafCounts, complete_binary


def check_counts(X, n_leaves=None) -> np.ndarray:
    """Validate a count matrix: 2-D, finite, non-negative integers."""
    X = check_array(X, dtype=None, ensure_min_samples=1)
    if X.dtype.kind == "f":
        if np.any(X != np.round(X)):
            raise InputError("counts must be integers")
    elif X.dtype.kind not in "iub":
        raise InputError(f"counts must be integers, got dtype {X.dtype}")
    if np.any(X < 0):
        raise InputError("counts must be non-negative")
    if n_leaves is not None and X.shape[1] != n_leaves:
        raise InputError(f"expected {n_leaves} leaf columns, got {X.shape[1]}")
    return X.astype(np.int64)


def _default_tree(n_leaves):
    d = int(n_leaves).bit_length()
    if n_leaves < 1 or 1 << (d - 1) != n_leaves:
        raise InputError(f"no tree given and {n_leaves} leaves is not a power of two")
    return complete_binary(d)


class _TreeRelease(BaseEstimator, TransformerMixin):
    def fit(self, X, y=None):
        X = check_counts(X)
        tree = self.tree if self.tree is not None else _default_tree(X.shape[1])
        if X.shape[1] != tree.n_leaves:
            raise InputError(f"tree has {tree.n_leaves} leaves, X has {X.shape[1]} columns")
        self._check_params(tree)
        self.tree_ = tree
        self.n_features_in_ = X.shape[1]
        if self.random_state is None:
            self.seed_ = int(np.random.SeedSequence().entropy % (2**63))
        else:
            self.seed_ = int(self.random_state)
        return self

    def _check_params(self, tree):
        pass

    def transform(self, X):
        check_is_fitted(self, "tree_")
        X = check_counts(X, self.n_features_in_)
        out = np.empty((X.shape[0], self.tree_.n_nodes))
        for k, row in enumerate(X):
            counts = LeafCounts.from_array(self.tree_, row)
            out[k] = self._release(counts, trial_rng(self.seed_, k)).values
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "tree_")
        return np.asarray(self.tree_.ids, dtype=object)


class LaplaceTreeAggregator(_TreeRelease):
    """eps-DP node weights with Laplace noise of scale ``d/eps``."""

    def __init__(self, tree=None, eps=1.0, random_state=None):
        self.tree = tree
        self.eps = eps
        self.random_state = random_state

    def _check_params(self, tree):
        baselines.laplace_scale(tree.d, self.eps)

    def _release(self, counts, rng):
        return baselines.laplace_tree(self.tree_, counts, self.eps, rng)


class GaussianTreeAggregator(_TreeRelease):
    """(eps, delta)-DP node weights with Gaussian noise."""

    def __init__(self, tree=None, eps=0.5, delta=1e-6, random_state=None):
        self.tree = tree
        self.eps = eps
        self.delta = delta
        self.random_state = random_state

    def _check_params(self, tree):
        baselines.gaussian_sigma(tree.d, self.eps, self.delta)

    def _release(self, counts, rng):
        return baselines.gaussian_tree(self.tree_, counts, self.eps, self.delta, rng)


class HierarchicalEstimator(_TreeRelease):
    """(alpha, eta)-accurate (eps, delta)-DP node weights, optionally clamped.

    Parameters
    ----------
    tau : float or "auto"
        Uniform threshold; ``"auto"`` uses the smallest admissible value.
    clamp : bool
        Spend half the budget on the estimate and half on clamping.
    force : bool
        Skip the threshold precondition (privacy is unaffected).
    """

    def __init__(self, tree=None, eps=1.0, delta=1e-6, alpha=0.5, eta=0.05, tau="auto",
                 clamp=False, force=False, random_state=None):
        self.tree = tree
        self.eps = eps
        self.delta = delta
        self.alpha = alpha
        self.eta = eta
        self.tau = tau
        self.clamp = clamp
        self.force = force
        self.random_state = random_state

    def _check_params(self, tree):
        e, dl = (self.eps / 2, self.delta / 2) if self.clamp else (self.eps, self.delta)
        tau = self.tau
        if tau == "auto":
            tau = hierarchy.required_tau_min(self.alpha, e, dl, self.eta, tree.d)
        self.spec_ = hierarchy.AccuracySpec.uniform(tree, self.alpha, self.eta, tau)
        if not self.force:
            need = hierarchy.required_tau_min(self.alpha, e, dl, self.eta, tree.d)
            if self.spec_.tau_min < need:
                raise PreconditionError(f"tau={self.spec_.tau_min:g} below required {need:.6g}", required=need)

    def _release(self, counts, rng):
        if self.clamp:
            return hierarchy.estimate_clamped(self.tree_, counts, self.spec_, self.eps, self.delta, rng, force=self.force)
        return hierarchy.estimate(self.tree_, counts, self.spec_, self.eps, self.delta, rng, force=self.force)
