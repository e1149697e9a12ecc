"""Threshold classification, multi-level reduction and the estimation pipeline.

The pipeline releases node weights with a multiplicative-plus-additive error
guarantee: for every node, ``|w~_u - w_u| <= alpha * max(w_u, tau_u)`` with
probability at least ``1 - eta``.

Building blocks, bottom up:

* **classification** labels each node above (``True``) or below (``False``) a
  threshold ``tau``.  Depth levels are scanned from the deepest up; one
  above-threshold session per tree asks whether the heaviest unlabeled node
  of the level is heavy, and on a yes every unlabeled node of the level gets
  a truncated-Laplace test.  Passing nodes are marked together with their
  ancestors, so labels are upward closed.
* **reduction** runs classification on a geometric ladder of thresholds from
  the top down.  Nodes labeled above at rung ``i`` receive the value ``M_i``
  and leave the forest; what remains is re-split into trees for the next
  rung.  Anything left after rung 1 receives ``M_0``.
* **estimation** privately bounds the root weight, builds the ladder, and
  runs the reduction.
* **clamping** post-processes any estimate into a window around a second,
  truncated-Laplace noisy copy of the weights, capping worst-case error.

The engine runs every tree of a forest in lockstep on flat arrays indexed by
node; ``group`` holds the dense tree id of each node still in play.
"""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InputError, PreconditionError
from .noise import TruncLapParams, sample_trunc_laplace, trunc_lap_radius
from .privacy import BudgetLedger, PrivacyBudget
from .svt import SvtBank, svt_margin
from .tree_core import LeafCounts, NodeValues, TreeShape, aggregate_exact

ALPHA_CAP = 0.5
_RTOL = 1e-9
_ENVELOPE_LEVELS = 256


def _check_budget(eps, delta):
    if not (eps > 0 and math.isfinite(eps)):
        raise InputError(f"eps must be positive, got {eps!r}")
    if not 0 < delta < 1:
        raise InputError(f"delta must lie in (0, 1), got {delta!r}")


def _check_unit(name, x):
    if not 0 < x < 1:
        raise InputError(f"{name} must lie in (0, 1), got {x!r}")


# ---------------------------------------------------------------- labels, spec


class Labels:
    """Above/below label per node (``True`` means above the threshold)."""

    def __init__(self, ids, top, budget: Optional[PrivacyBudget] = None):
        self.ids = tuple(ids)
        self.index = {u: k for k, u in enumerate(self.ids)}
        self.top = np.asarray(top, dtype=bool)
        self.top.flags.writeable = False
        self.budget = budget

    def __getitem__(self, node_id) -> bool:
        try:
            return bool(self.top[self.index[node_id]])
        except KeyError:
            raise InputError(f"unknown node {node_id!r}") from None

    @property
    def top_nodes(self) -> frozenset:
        return frozenset(u for u, t in zip(self.ids, self.top) if t)

    def as_dict(self):
        return {u: bool(t) for u, t in zip(self.ids, self.top)}

    def __repr__(self):
        return f"Labels(n={len(self.ids)}, n_top={int(self.top.sum())})"


@dataclass(frozen=True)
class AccuracySpec:
    """Target accuracy ``(alpha, eta)`` and a threshold per node.

    ``thresholds`` is aligned with ``tree.ids``.
    """

    alpha: float
    eta: float
    thresholds: np.ndarray

    def __post_init__(self):
        _check_unit("alpha", self.alpha)
        _check_unit("eta", self.eta)
        t = np.asarray(self.thresholds, dtype=float)
        if t.ndim != 1 or t.size == 0 or not np.all(np.isfinite(t)) or np.any(t < 0):
            raise InputError("thresholds must be a non-empty vector of finite values >= 0")
        t.flags.writeable = False
        object.__setattr__(self, "thresholds", t)

    @classmethod
    def uniform(cls, tree: TreeShape, alpha, eta, tau) -> "AccuracySpec":
        return cls(alpha, eta, np.full(tree.n_nodes, float(tau)))

    @classmethod
    def from_mapping(cls, tree: TreeShape, alpha, eta, taus: Mapping, default=None):
        t = np.full(tree.n_nodes, np.nan if default is None else float(default))
        for u, v in taus.items():
            t[tree.node_index(u)] = float(v)
        if np.isnan(t).any():
            missing = tree.ids[int(np.flatnonzero(np.isnan(t))[0])]
            raise InputError(f"no threshold for node {missing!r} and no default")
        return cls(alpha, eta, t)

    @property
    def tau_min(self) -> float:
        return float(self.thresholds.min())

    @property
    def tau_max(self) -> float:
        return float(self.thresholds.max())


# ---------------------------------------------------------------- classification


def classification_constants(M, alpha, tau, eps, delta, eta, d):
    """Cutoff ``c``, band ``Delta`` and the per-node truncated-Laplace noise."""
    a = min(alpha, ALPHA_CAP)
    c = M / ((1 - a) * tau)
    margin = svt_margin(c, eps / 2, d, eta)  # = 16c/eps * ln(2d/eta)
    noise = TruncLapParams(2 * c / eps, trunc_lap_radius(eps / (2 * c), delta / (2 * c)))
    return c, margin, noise


def classification_min_tau(M, alpha, eps, delta, eta, d) -> float:
    """Smallest ``tau`` for which classification keeps its accuracy contract."""
    a = min(alpha, ALPHA_CAP)
    x = max(48 * math.log(2 * d / eta), 6 * math.log1p(math.expm1(eps / 2) / delta))
    return math.sqrt(2 * M * x / (a * eps))


def _classify_active(tree, w, active, group, n_groups, M, eta, alpha, tau, eps, delta, d, rng):
    """Label the active part of ``tree``; one session per group."""
    top = np.zeros(tree.n_nodes, dtype=bool)
    if M < tau:
        return top
    c, margin, noise = classification_constants(M, alpha, tau, eps, delta, eta, d)
    bank = SvtBank(n_groups, eta, c, tau, eps / 2, d, rng)
    cut = tau - margin - noise.R
    parent = tree.parent
    prev = None
    for lvl in reversed(tree.levels):
        if prev is not None:
            # a marked child marks its parent (same tree whenever the parent is active)
            p = parent[prev[top[prev]]]
            top[p[active[p]]] = True
        prev = lvl
        nodes = lvl[active[lvl] & ~top[lvl]]
        if nodes.size == 0:
            continue
        g = group[nodes]
        fmax = np.full(n_groups, -np.inf)
        np.maximum.at(fmax, g, w[nodes])
        present = np.flatnonzero(fmax > -np.inf)
        ans = bank.answer(present, fmax[present])
        yes = np.zeros(n_groups, dtype=bool)
        yes[present[ans]] = True
        cand = nodes[yes[g]]
        if cand.size:
            noisy = w[cand] + sample_trunc_laplace(noise, rng, cand.size)
            top[cand[noisy >= cut]] = True
    return top


def _regroup(tree, active):
    """Dense tree id for every active node; each tree is a full subtree."""
    parent = tree.parent
    group = np.full(tree.n_nodes, -1, dtype=np.int64)
    for lvl in tree.levels:
        a = lvl[active[lvl]]
        if a.size == 0:
            continue
        p = parent[a]
        pp = np.maximum(p, 0)
        is_root = (p < 0) | ~active[pp]
        group[a] = np.where(is_root, a, group[pp])
    ids = group[active]
    uniq, inv = np.unique(ids, return_inverse=True)
    group[active] = inv
    return group, len(uniq)


def transition_nodes(tree: TreeShape, top) -> np.ndarray:
    """Indices of nodes labeled above none of whose children is above."""
    top = np.asarray(top, dtype=bool)
    has_top_child = np.zeros(tree.n_nodes, dtype=bool)
    kids = np.flatnonzero(top)
    kids = kids[tree.parent[kids] >= 0]
    has_top_child[tree.parent[kids]] = True
    return np.flatnonzero(top & ~has_top_child)


def _combine_forest(forest: Sequence[TreeShape], counts):
    """One tree holding the whole forest under a hidden, inactive root."""
    seen = set()
    for t in forest:
        overlap = seen.intersection(t.ids)
        if overlap:
            raise InputError(f"forest trees share node ids, e.g. {sorted(overlap)[0]!r}")
        seen.update(t.ids)
    if isinstance(counts, (LeafCounts, Mapping)):
        merged = counts.as_dict() if isinstance(counts, LeafCounts) else dict(counts)
        per_tree = []
        for t in forest:
            per_tree.append({u: v for u, v in merged.items() if u in t.index})
        unknown = set(merged) - seen
        if unknown:
            raise InputError(f"count for unknown leaf {sorted(unknown)[0]!r}")
    else:
        per_tree = list(counts)
        if len(per_tree) != len(forest):
            raise InputError("need one counts object per forest tree")
    ws = [aggregate_exact(t, c).values for t, c in zip(forest, per_tree)]
    if len(forest) == 1:
        return forest[0], ws[0].astype(float), None
    hidden = "\x00forest-root"
    while hidden in seen:
        hidden += "_"
    parents = {hidden: None}
    for t in forest:
        for k, u in enumerate(t.ids):
            parents[u] = t.ids[t.parent[k]] if k else hidden
    big = TreeShape(parents)
    w = np.zeros(big.n_nodes)
    for t, wt in zip(forest, ws):
        w[[big.index[u] for u in t.ids]] = wt
    return big, w, big.index[hidden]


def classify_forest(
    forest: Sequence[TreeShape],
    counts,
    M,
    eta,
    alpha,
    tau,
    eps,
    delta,
    rng,
    *,
    force: bool = False,
    ledger: Optional[BudgetLedger] = None,
) -> Labels:
    """(eps, delta)-DP labels for every node of a forest of disjoint trees.

    Trees read disjoint leaves, so the forest costs the same budget as one
    tree.  ``counts`` is a single ``leaf -> count`` mapping covering all trees
    or a sequence with one counts object per tree.

    Raises
    ------
    PreconditionError
        If ``M >= tau`` and ``tau`` is below :func:`classification_min_tau`,
        unless ``force`` is set (privacy still holds, accuracy does not).
    """
    if not forest:
        raise InputError("empty forest")
    _check_budget(eps, delta)
    _check_unit("eta", eta)
    _check_unit("alpha", alpha)
    if not (tau > 0 and math.isfinite(tau)):
        raise InputError(f"tau must be positive, got {tau!r}")
    if not (M >= 0 and math.isfinite(M)):
        raise InputError(f"M must be finite and non-negative, got {M!r}")
    d = max(t.d for t in forest)
    if M >= tau and not force:
        need = classification_min_tau(M, alpha, eps, delta, eta, d)
        if tau < need:
            raise PreconditionError(
                f"tau={tau:g} is below the required minimum {need:.6g} for M={M:g}", required=need
            )
    big, w, hidden = _combine_forest(forest, counts)
    active = np.ones(big.n_nodes, dtype=bool)
    if hidden is not None:
        active[hidden] = False
    group, n_groups = _regroup(big, active)
    top = _classify_active(big, w, active, group, n_groups, M, eta, alpha, tau, eps, delta, d, rng)
    budget = PrivacyBudget(eps, delta)
    if ledger is not None:
        ledger.spend("classify", budget)
    if hidden is None:
        return Labels(big.ids, top, budget)
    keep = np.arange(big.n_nodes) != hidden
    return Labels([u for k, u in enumerate(big.ids) if k != hidden], top[keep], budget)


def classify_tree(tree, counts, M, eta, alpha, tau, eps, delta, rng, **kw) -> Labels:
    return classify_forest([tree], [counts], M, eta, alpha, tau, eps, delta, rng, **kw)


# ---------------------------------------------------------------- schedule


def schedule_ratio(alpha: float):
    """``(beta, r)`` with ``beta = alpha/(6+5 alpha)`` and ``r = (1+alpha)(1-beta)/(1+beta)``."""
    beta = alpha / (6 + 5 * alpha)
    return beta, (1 + alpha) * (1 - beta) / (1 + beta)


def schedule_normalizer(alpha: float) -> float:
    """``sum_{i>=1} i q^{i-1} = (1-q)^-2`` with ``q = 1/r`` < 1."""
    _, r = schedule_ratio(alpha)
    return (1 - 1 / r) ** -2


def _level_weights(alpha, ell):
    _, r = schedule_ratio(alpha)
    i = np.arange(1, ell + 1)
    return i * (1 / r) ** (i - 1) / schedule_normalizer(alpha)


def _threshold_requirement(alpha, eps, delta, eta, d, levels):
    """Per-level lower bound on ``tau_min`` implied by the classification contract."""
    beta, r = schedule_ratio(alpha)
    i = np.arange(1, levels + 1)
    share = _level_weights(alpha, levels) / 2
    eps_i, delta_i = eps * share, delta * share
    eta_i = eta / 2.0**i
    x = np.maximum(
        48 * np.log(2 * d / eta_i), 6 * np.log1p(np.expm1(eps_i / 2) / delta_i)
    )
    # tau_i >= 2(1+alpha)(1-beta) x / (beta eps_i), tau_i = alpha tau_min r^{i-1} / (1+beta)
    tau_i_min = 2 * (1 + alpha) * (1 - beta) * x / (beta * eps_i)
    return tau_i_min * (1 + beta) / (alpha * r ** (i - 1))


def certified_min_tau(alpha, eps, delta, eta, d, levels: Optional[int] = None) -> float:
    """Smallest ``tau_min`` for which every rung of the ladder meets its contract.

    Without ``levels`` the bound covers ladders of any practical height.
    """
    _check_budget(eps, delta)
    _check_unit("alpha", alpha)
    _check_unit("eta", eta)
    return float(_threshold_requirement(alpha, eps, delta, eta, d, levels or _ENVELOPE_LEVELS).max())


def closed_form_min_tau(alpha, eps, delta, eta, d) -> float:
    """Closed-form threshold bound ``324 (1+a)^2/(a^4 eps) * max(8 ln(4d/eta), ln(1 + 2(e^{eps/4}-1)/delta))``."""
    return (
        324 * (1 + alpha) ** 2 / (alpha**4 * eps)
        * max(8 * math.log(4 * d / eta), math.log1p(2 * math.expm1(eps / 4) / delta))
    )


def required_tau_min(alpha, eps, delta, eta, d) -> float:
    """The larger of the closed-form and the certified threshold bounds."""
    return max(closed_form_min_tau(alpha, eps, delta, eta, d), certified_min_tau(alpha, eps, delta, eta, d))


@dataclass
class ScheduleParams:
    """A ladder of classification rungs, index ``k`` holding rung ``i = k + 1``."""

    alpha: float
    beta: float
    r: float
    C: float
    ell: int
    M: float
    M0: float
    tau_min: float
    d: int
    eps: float
    delta: float
    eta: float
    M_i: np.ndarray
    tau_i: np.ndarray
    alpha_i: np.ndarray
    eps_i: np.ndarray
    delta_i: np.ndarray
    eta_i: np.ndarray
    forced: bool = field(default=False)

    @property
    def budget(self) -> PrivacyBudget:
        """Budget actually consumed by the rungs."""
        return PrivacyBudget(math.fsum(self.eps_i), min(1.0, math.fsum(self.delta_i)))

    def check(self):
        """List of ``(constraint, rung, message)`` for every violated constraint."""
        bad = []
        tol = 1 + _RTOL
        for k in range(self.ell):
            i = k + 1
            a = self.alpha_i[k]
            x = max(
                48 * math.log(2 * self.d / self.eta_i[k]),
                6 * math.log1p(math.expm1(self.eps_i[k] / 2) / self.delta_i[k]),
            )
            need = math.sqrt(2 * self.M_i[k] / (a * self.eps_i[k])) * math.sqrt(x)
            if self.tau_i[k] * tol < need:
                bad.append(("threshold", i, f"tau_{i}={self.tau_i[k]:.6g} < {need:.6g}"))
            if not ((1 - a) * self.tau_i[k] <= self.M_i[k] * tol
                    and self.M_i[k] <= (1 + self.alpha) * (1 - a) * self.tau_i[k] * tol):
                bad.append(("sandwich", i, f"M_{i} outside [(1-a_i) tau_i, (1+alpha)(1-a_i) tau_i]"))
            lower = self.M0 if k == 0 else self.M_i[k - 1]
            if lower * tol < (1 + a) * self.tau_i[k]:
                bad.append(("chain", i - 1, f"M_{i - 1} < (1+a_{i}) tau_{i}"))
        if self.M_i[-1] * tol < self.M:
            bad.append(("chain", self.ell, f"M_{self.ell}={self.M_i[-1]:.6g} < M={self.M:.6g}"))
        if math.fsum(self.eta_i) > self.eta * tol:
            bad.append(("failure budget", None, "sum of eta_i exceeds eta"))
        if not 0 <= self.M0 <= self.alpha * self.tau_min * tol:
            bad.append(("floor", 0, "M_0 outside [0, alpha tau_min]"))
        if math.fsum(self.eps_i) > self.eps / 2 * tol or math.fsum(self.delta_i) > self.delta / 2 * tol:
            bad.append(("privacy budget", None, "rungs spend more than half the budget"))
        return bad

    def validate(self):
        """Raise on the first violated constraint.

        A threshold violation is a :class:`PreconditionError` (skipped when the
        schedule was built with ``force``); anything else is an
        :class:`InputError`.
        """
        for name, i, msg in self.check():
            if name == "threshold":
                if self.forced:
                    continue
                raise PreconditionError(
                    f"rung {i}: {msg}",
                    required=max(
                        closed_form_min_tau(self.alpha, self.eps, self.delta, self.eta, self.d),
                        certified_min_tau(self.alpha, self.eps, self.delta, self.eta, self.d, self.ell),
                    ),
                )
            raise InputError(f"schedule constraint '{name}' fails at rung {i}: {msg}")
        return self


def schedule_params(alpha, eps, delta, eta, tau_min, M, d, *, force=False) -> ScheduleParams:
    """Geometric ladder spending at most ``(eps/2, delta/2)`` over its rungs.

    Rung ``i`` uses ``tau_i = alpha tau_min r^{i-1}/(1+beta)``,
    ``M_i = (1+alpha)(1-beta) tau_i``, ``eta_i = eta/2^i`` and a share
    ``i q^{i-1}/C`` of ``(eps/2, delta/2)`` with ``q = 1/r`` and
    ``C = (1-q)^-2``.
    """
    _check_budget(eps, delta)
    _check_unit("alpha", alpha)
    _check_unit("eta", eta)
    if not (tau_min > 0 and math.isfinite(tau_min)):
        raise InputError(f"tau_min must be positive, got {tau_min!r}")
    if not (M >= 0 and math.isfinite(M)):
        raise InputError(f"M must be finite and non-negative, got {M!r}")
    beta, r = schedule_ratio(alpha)
    M0 = alpha * tau_min
    ell = 1
    if M > M0:
        ell = max(1, math.ceil(math.log(M / M0) / math.log(r)))
    while M0 * r**ell < M:  # guard against rounding in the ceiling
        ell += 1
    i = np.arange(1, ell + 1)
    tau_i = M0 / (1 + beta) * r ** (i - 1)
    share = _level_weights(alpha, ell) / 2
    sched = ScheduleParams(
        alpha=alpha, beta=beta, r=r, C=schedule_normalizer(alpha), ell=ell, M=float(M),
        M0=M0, tau_min=float(tau_min), d=int(d), eps=eps, delta=delta, eta=eta,
        M_i=(1 + alpha) * (1 - beta) * tau_i, tau_i=tau_i, alpha_i=np.full(ell, beta),
        eps_i=eps * share, delta_i=delta * share, eta_i=eta / 2.0**i, forced=force,
    )
    return sched.validate()


# ---------------------------------------------------------------- reduction / estimation


def _reduce(tree, w, sched: ScheduleParams, rng):
    n = tree.n_nodes
    est = np.empty(n)
    active = np.ones(n, dtype=bool)
    group = np.zeros(n, dtype=np.int64)
    n_groups = 1
    for k in range(sched.ell - 1, -1, -1):
        top = _classify_active(
            tree, w, active, group, n_groups, sched.M_i[k], sched.eta_i[k], sched.alpha_i[k],
            sched.tau_i[k], sched.eps_i[k], sched.delta_i[k], sched.d, rng,
        )
        if top.any():
            # every labeled node is a transition node or one of its ancestors in the same tree
            est[top] = sched.M_i[k]
            active &= ~top
            if not active.any():
                return est
            group, n_groups = _regroup(tree, active)
    est[active] = sched.M0
    return est


def reduce_estimate(tree: TreeShape, counts, schedule: ScheduleParams, rng) -> NodeValues:
    """Estimates taking values in ``{M_0, ..., M_ell}``; costs ``schedule.budget``.

    The caller guarantees the root weight is at most ``schedule.M``.
    """
    schedule.validate()
    if schedule.d < tree.d:
        raise InputError(f"schedule built for depth {schedule.d}, tree has depth {tree.d}")
    w = aggregate_exact(tree, counts).values.astype(float)
    return NodeValues(tree, _reduce(tree, w, schedule, rng))


def root_bound_radius(eps, delta) -> float:
    """``(2/eps) ln(1 + (e^{eps/2}-1)/delta)``: noise radius for the root bound at ``(eps/2, delta/2)``."""
    return trunc_lap_radius(eps / 2, delta / 2)


def estimate(
    tree: TreeShape,
    counts,
    spec: AccuracySpec,
    eps,
    delta,
    rng,
    *,
    force: bool = False,
    ledger: Optional[BudgetLedger] = None,
    return_schedule: bool = False,
):
    """(eps, delta)-DP estimate of every node weight, (alpha, eta)-accurate.

    Half the budget buys a private upper bound ``M >= w_root``; the other half
    runs the reduction ladder.

    Raises
    ------
    PreconditionError
        If ``spec.tau_min`` is below :func:`required_tau_min` and ``force`` is
        not set.
    """
    _check_budget(eps, delta)
    if spec.thresholds.shape != (tree.n_nodes,):
        raise InputError("accuracy spec does not match the tree")
    tau_min = spec.tau_min
    if not tau_min > 0:
        raise InputError("tau_min must be positive")
    if not force:
        need = required_tau_min(spec.alpha, eps, delta, spec.eta, tree.d)
        if tau_min < need:
            raise PreconditionError(
                f"tau_min={tau_min:g} is below the required minimum {need:.6g}", required=need
            )
    w = aggregate_exact(tree, counts).values.astype(float)
    R = root_bound_radius(eps, delta)
    M = w[0] + R + sample_trunc_laplace(TruncLapParams(2 / eps, R), rng)
    sched = schedule_params(spec.alpha, eps, delta, spec.eta, tau_min, M, tree.d, force=force)
    out = NodeValues(tree, _reduce(tree, w, sched, rng))
    if ledger is not None:
        ledger.spend("root bound", PrivacyBudget(eps / 2, delta / 2))
        ledger.spend("reduction", PrivacyBudget(eps / 2, delta / 2))
    if return_schedule:
        return out, sched
    return out


def clamp_radius(eps, delta, d) -> float:
    """Window half-width ``R`` at per-node budget ``(eps/(2d), delta/(2d))``."""
    return trunc_lap_radius(eps / (2 * d), delta / (2 * d))


def clamp_to_mrmse(tree: TreeShape, counts, raw, eps, delta, rng, *, ledger=None) -> NodeValues:
    """Clamp ``raw`` into ``[w''_u - R, w''_u + R]`` around a noisy copy ``w''``.

    ``w''_u = w_u + TruncLap(2d/eps, R)``.  The clamped error never exceeds
    the raw error and never exceeds ``2R``.  The noisy copy costs
    ``(eps/2, delta/2)``; if ``raw`` came from an ``(eps/2, delta/2)``-DP
    mechanism the combined release is ``(eps, delta)``-DP.
    """
    _check_budget(eps, delta)
    if isinstance(raw, NodeValues):
        if raw.tree is not tree and raw.tree.ids != tree.ids:
            raise InputError("raw estimates belong to a different tree")
        r = raw.values.astype(float)
    elif isinstance(raw, Mapping):
        missing = [u for u in tree.ids if u not in raw]
        if missing:
            raise InputError(f"missing raw estimate for node {missing[0]!r}")
        r = np.array([float(raw[u]) for u in tree.ids])
    else:
        r = np.asarray(raw, dtype=float)
        if r.shape != (tree.n_nodes,):
            raise InputError(f"expected {tree.n_nodes} raw estimates, got shape {r.shape}")
    d = tree.d
    R = clamp_radius(eps, delta, d)
    w = aggregate_exact(tree, counts).values.astype(float)
    noisy = w + sample_trunc_laplace(TruncLapParams(2 * d / eps, R), rng, tree.n_nodes)
    if ledger is not None:
        ledger.spend("clamp", PrivacyBudget(eps / 2, delta / 2))
    return NodeValues(tree, np.clip(r, noisy - R, noisy + R))


def estimate_clamped(tree, counts, spec, eps, delta, rng, *, force=False, ledger=None) -> NodeValues:
    """Estimation at ``(eps/2, delta/2)`` followed by clamping; ``(eps, delta)`` overall."""
    raw = estimate(tree, counts, spec, eps / 2, delta / 2, rng, force=force)
    if ledger is not None:
        ledger.spend("estimate", PrivacyBudget(eps / 2, delta / 2))
    return clamp_to_mrmse(tree, counts, raw, eps, delta, rng, ledger=ledger)
