"""Noise-additive tree aggregation: the Laplace and Gaussian mechanisms.

A leaf feeds ``d`` node weights (its ancestors), so the workload has L1
column norm ``d`` and L2 column norm ``sqrt(d)``.  Both mechanisms use the
tree's maximum depth for every node.
"""

import math

import numpy as np

from .errors import InputError
from .noise import sample_gaussian, sample_laplace
from .tree_core import NodeValues, aggregate_exact


def laplace_scale(d: int, eps: float) -> float:
    if not (eps > 0 and math.isfinite(eps)):
        raise InputError(f"eps must be positive, got {eps!r}")
    return d / eps


def gaussian_sigma(d: int, eps: float, delta: float) -> float:
    """Standard deviation ``sqrt(2 ln(1.25/delta)) * sqrt(d) / eps``; needs eps, delta in (0, 1)."""
    if not 0 < eps < 1:
        raise InputError(f"the Gaussian mechanism needs eps in (0, 1), got {eps!r}")
    if not 0 < delta < 1:
        raise InputError(f"the Gaussian mechanism needs delta in (0, 1), got {delta!r}")
    return math.sqrt(2 * math.log(1.25 / delta)) * math.sqrt(d) / eps


def laplace_tree(tree, counts, eps, rng) -> NodeValues:
    """eps-DP release: every node weight plus i.i.d. Lap(d / eps)."""
    b = laplace_scale(tree.d, eps)
    w = aggregate_exact(tree, counts).values
    return NodeValues(tree, w + sample_laplace(b, rng, tree.n_nodes))


def gaussian_tree(tree, counts, eps, delta, rng) -> NodeValues:
    """(eps, delta)-DP release: every node weight plus i.i.d. N(0, sigma^2)."""
    sigma = gaussian_sigma(tree.d, eps, delta)
    w = aggregate_exact(tree, counts).values
    return NodeValues(tree, w + sample_gaussian(sigma, rng, tree.n_nodes))


def exact_tree(tree, counts, rng=None) -> NodeValues:
    """Non-private reference mechanism returning the exact weights as floats."""
    w = aggregate_exact(tree, counts).values
    return NodeValues(tree, w.astype(np.float64))
