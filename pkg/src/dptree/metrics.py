"""Monte Carlo error metrics for tree-aggregation mechanisms.

A *mechanism* is any callable ``mechanism(tree, counts, rng)`` returning
:class:`~dptree.tree_core.NodeValues` or an array aligned with ``tree.ids``.
Trial ``t`` runs on ``trial_rng(seed, t)``, so adding trials never changes
earlier ones.  Trial outputs are reduced in chunks and never all stored.

alpha-RMSE of an estimate ``z~`` of ``z`` is
``sqrt(E[max(|z~ - z| - alpha z, 0)^2])``.  The max over inputs in its
worst-case (mRMSE) form cannot be computed; :func:`mrmse_over_suite` takes the
max over a declared finite suite of inputs instead.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InputError
from .noise import trial_rng
from .tree_core import NodeValues, TreeShape, aggregate_exact

Mechanism = Callable


class MCEstimate(NamedTuple):
    value: float
    stderr: float
    trials: int


def _as_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    if rng is None:
        raise InputError("a seed or Generator is required")
    return int(rng)


def _values(out):
    return out.values if isinstance(out, NodeValues) else np.asarray(out)


def iter_trials(mechanism, tree, counts, trials, seed, chunk=1024, stream=0):
    """Yield mechanism outputs as ``(k, n_nodes)`` float blocks."""
    if int(trials) != trials or trials < 1:
        raise InputError(f"trials must be a positive integer, got {trials!r}")
    t = 0
    while t < trials:
        k = min(chunk, trials - t)
        block = np.empty((k, tree.n_nodes))
        for j in range(k):
            block[j] = _values(mechanism(tree, counts, trial_rng(seed, t + j, stream)))
        t += k
        yield block


def wilson_interval(k, n, z=1.0):
    """Wilson score interval ``(low, high)`` for ``k`` successes in ``n`` trials."""
    k = np.asarray(k, dtype=float)
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def wilson_margin(k, n, z=1.0):
    """Half-width of the Wilson interval."""
    lo, hi = wilson_interval(k, n, z)
    return (hi - lo) / 2


def _rmse_from_moments(s1, s2, n):
    """alpha-RMSE and its delta-method standard error from sums of r^2 and r^4."""
    m = s1 / n
    var = np.maximum(s2 / n - m * m, 0.0)
    rmse = np.sqrt(m)
    se_m = np.sqrt(var / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(rmse > 0, se_m / (2 * rmse), 0.0)
    return rmse, se


def rmse_alpha(estimates, true_value, alpha=0.0) -> MCEstimate:
    """alpha-RMSE of stored samples of a scalar estimate."""
    z = np.asarray(estimates, dtype=float).ravel()
    if z.size == 0:
        raise InputError("no samples")
    r2 = np.maximum(np.abs(z - true_value) - alpha * true_value, 0.0) ** 2
    rmse, se = _rmse_from_moments(r2.sum(), (r2 * r2).sum(), z.size)
    return MCEstimate(float(rmse), float(se), z.size)


def rel_kappa(estimates, true_value, kappa) -> float:
    """Smoothed relative error ``E|z~ - z| / max(z, kappa)``."""
    if not kappa > 0:
        raise InputError(f"kappa must be positive, got {kappa!r}")
    z = np.asarray(estimates, dtype=float)
    return float(np.mean(np.abs(z - true_value)) / max(true_value, kappa))


def rel_bound(rmse, kappa, alpha) -> float:
    """Upper bound ``sqrt(2) (rmse/kappa + alpha)`` on the smoothed relative error."""
    return math.sqrt(2) * (rmse / kappa + alpha)


@dataclass
class ErrorReport:
    """Per-node Monte Carlo error statistics of one mechanism on one input."""

    node_ids: tuple
    trials: int
    alpha: float
    rmse: np.ndarray
    rmse_se: np.ndarray
    bias: np.ndarray
    rel: Optional[np.ndarray] = None
    rel_se: Optional[np.ndarray] = None
    kappa: Optional[float] = None
    failures: Optional[np.ndarray] = None
    eta: Optional[float] = None
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def mrmse(self) -> float:
        return float(self.rmse.max())

    @property
    def mrmse_se(self) -> float:
        return float(self.rmse_se[int(np.argmax(self.rmse))])

    @property
    def worst_node(self):
        return self.node_ids[int(np.argmax(self.rmse))]

    @property
    def failure_rate(self):
        return None if self.failures is None else self.failures / self.trials

    def failure_margin(self, z=1.0):
        return wilson_margin(self.failures, self.trials, z)

    def flagged(self, z=1.0, k=3.0):
        """Nodes whose failure rate exceeds ``eta + k`` Wilson margins."""
        if self.failures is None:
            return ()
        over = self.failure_rate > self.eta + k * self.failure_margin(z)
        return tuple(u for u, o in zip(self.node_ids, over) if o)

    def rows(self):
        """``(node_id, metric, value, stderr)`` tuples, summary row first."""
        p = self.label + ":" if self.label else ""
        out = [("*", p + "mrmse_alpha", self.mrmse, self.mrmse_se)]
        if self.failures is not None:
            out.append(("*", p + "max_failure_rate", float(self.failure_rate.max()), float(self.failure_margin().max())))
        for k, u in enumerate(self.node_ids):
            out.append((u, p + "rmse_alpha", float(self.rmse[k]), float(self.rmse_se[k])))
            if self.rel is not None:
                out.append((u, p + "rel_kappa", float(self.rel[k]), float(self.rel_se[k])))
            if self.failures is not None:
                out.append((u, p + "failure_rate", float(self.failure_rate[k]), float(self.failure_margin()[k])))
        return out


class _Accumulator:
    def __init__(self, w, alpha, bound=None, kappa=None):
        self.w = np.asarray(w, dtype=float)
        self.alpha = alpha
        self.bound = bound
        self.kappa = kappa
        n = self.w.size
        self.n = 0
        self.s1 = np.zeros(n)
        self.s2 = np.zeros(n)
        self.e1 = np.zeros(n)
        self.a1 = np.zeros(n)
        self.a2 = np.zeros(n)
        self.fail = np.zeros(n, dtype=np.int64)

    def update(self, block):
        err = block - self.w
        a = np.abs(err)
        r2 = np.maximum(a - self.alpha * self.w, 0.0) ** 2
        self.n += block.shape[0]
        self.s1 += r2.sum(0)
        self.s2 += (r2 * r2).sum(0)
        self.e1 += err.sum(0)
        self.a1 += a.sum(0)
        self.a2 += (a * a).sum(0)
        if self.bound is not None:
            self.fail += (a > self.bound).sum(0)

    def report(self, ids, eta=None, label=""):
        rmse, se = _rmse_from_moments(self.s1, self.s2, self.n)
        rel = rel_se = None
        if self.kappa is not None:
            denom = np.maximum(self.w, self.kappa)
            m = self.a1 / self.n
            sd = np.sqrt(np.maximum(self.a2 / self.n - m * m, 0.0))
            rel, rel_se = m / denom, sd / math.sqrt(self.n) / denom
        return ErrorReport(
            node_ids=tuple(ids), trials=self.n, alpha=self.alpha, rmse=rmse, rmse_se=se,
            bias=self.e1 / self.n, rel=rel, rel_se=rel_se, kappa=self.kappa,
            failures=self.fail if self.bound is not None else None, eta=eta, label=label,
        )


def error_report(mechanism, tree, counts, alpha, trials, rng, *, kappa=None, spec=None,
                 label="", chunk=1024) -> ErrorReport:
    """Run ``trials`` independent releases and summarize every node."""
    seed = _as_seed(rng)
    w = aggregate_exact(tree, counts).values
    bound = None
    if spec is not None:
        bound = spec.alpha * np.maximum(w, spec.thresholds)
    acc = _Accumulator(w, alpha, bound, kappa)
    for block in iter_trials(mechanism, tree, counts, trials, seed, chunk):
        acc.update(block)
    return acc.report(tree.ids, None if spec is None else spec.eta, label)


def rmse_alpha_mc(mechanism, tree: TreeShape, counts, node, alpha, trials, rng) -> MCEstimate:
    """Monte Carlo alpha-RMSE of one node."""
    k = tree.node_index(node)
    rep = error_report(mechanism, tree, counts, alpha, trials, rng)
    return MCEstimate(float(rep.rmse[k]), float(rep.rmse_se[k]), rep.trials)


@dataclass
class SuiteReport:
    reports: list

    @property
    def mrmse(self) -> float:
        return max(r.mrmse for r in self.reports)

    @property
    def worst(self) -> ErrorReport:
        return max(self.reports, key=lambda r: r.mrmse)

    @property
    def mrmse_se(self) -> float:
        return self.worst.mrmse_se


def mrmse_over_suite(mechanism, suite: Sequence, alpha, trials, rng, *, labels=None) -> SuiteReport:
    """Max over a finite suite of ``(tree, counts)`` inputs and over nodes of the alpha-RMSE."""
    suite = list(suite)
    if not suite:
        raise InputError("empty input suite")
    seed = _as_seed(rng)
    reports = []
    for j, (tree, counts) in enumerate(suite):
        lab = labels[j] if labels else f"input{j}"
        reports.append(error_report(mechanism, tree, counts, alpha, trials, seed + j, label=lab))
    return SuiteReport(reports)


def accuracy_check(mechanism, tree, counts, spec, trials, rng, *, label="") -> ErrorReport:
    """Per-node frequency of ``|w~_u - w_u| > alpha max(w_u, tau_u)``."""
    return error_report(mechanism, tree, counts, spec.alpha, trials, rng, spec=spec, label=label)


def default_suite(tree: TreeShape, magnitudes=(1, 100, 10_000), uniform=1):
    """All-zero input, one heavy leaf per magnitude, and uniform counts."""
    first = tree.leaf_ids[0]
    suite = [(tree, {})]
    suite += [(tree, {first: int(m)}) for m in magnitudes]
    suite.append((tree, {u: int(uniform) for u in tree.leaf_ids}))
    labels = ["zero"] + [f"heavy{m}" for m in magnitudes] + ["uniform"]
    return suite, labels
