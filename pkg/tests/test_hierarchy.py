import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dptree.errors import InputError, PreconditionError
from dptree.hierarchy import (
    AccuracySpec,
    certified_min_tau,
    clamp_radius,
    clamp_to_mrmse,
    classification_min_tau,
    classify_forest,
    classify_tree,
    closed_form_min_tau,
    estimate,
    estimate_clamped,
    reduce_estimate,
    required_tau_min,
    schedule_normalizer,
    schedule_params,
    schedule_ratio,
    transition_nodes,
)
from dptree.privacy import BudgetLedger, PrivacyBudget
from dptree.tree_core import aggregate_exact, complete_binary, path_tree

from conftest import small_trees


class CountingRng:
    """Generator proxy that records every draw."""

    def __init__(self, seed=0):
        self.g = np.random.default_rng(seed)
        self.draws = 0

    def __getattr__(self, name):
        fn = getattr(self.g, name)

        def wrapped(*a, **k):
            out = fn(*a, **k)
            self.draws += np.size(out)
            return out

        return wrapped


# ---------------------------------------------------------------- classification


def test_below_threshold_no_draws():
    t = complete_binary(5)
    r = CountingRng()
    lab = classify_tree(t, {t.leaf_ids[0]: 3}, 50.0, 0.05, 0.5, 100.0, 1.0, 1e-6, r)
    assert not lab.top.any() and r.draws == 0


def test_precondition_and_force():
    t = complete_binary(4)
    need = classification_min_tau(1e4, 0.5, 1.0, 1e-6, 0.05, t.d)
    with pytest.raises(PreconditionError) as ei:
        classify_tree(t, {}, 1e4, 0.05, 0.5, need / 2, 1.0, 1e-6, np.random.default_rng(0))
    assert ei.value.required == pytest.approx(need)
    assert f"{need:.6g}" in str(ei.value)
    lab = classify_tree(t, {}, 1e4, 0.05, 0.5, need / 2, 1.0, 1e-6, np.random.default_rng(0), force=True)
    assert len(lab.ids) == t.n_nodes


def test_extreme_inputs_classified():
    t = complete_binary(4)
    tau = 1.01 * classification_min_tau(1e6, 0.5, 1.0, 1e-6, 0.05, t.d)
    heavy = {t.leaf_ids[3]: int(50 * tau)}
    lab = classify_tree(t, heavy, 1e6, 0.05, 0.5, tau, 1.0, 1e-6, np.random.default_rng(1))
    path = {t.ids[k] for k in t.ancestors(t.node_index(t.leaf_ids[3]))}
    assert lab.top_nodes == frozenset(path)
    lab0 = classify_tree(t, {}, 1e6, 0.05, 0.5, tau, 1.0, 1e-6, np.random.default_rng(1))
    assert not lab0.top.any()


def test_single_tree_forest_bit_identical():
    t = complete_binary(5)
    c = {u: k * 40 for k, u in enumerate(t.leaf_ids)}
    args = (1e4, 0.05, 0.5, 300.0, 1.0, 1e-6)
    a = classify_tree(t, c, *args, np.random.default_rng(5), force=True)
    b = classify_forest([t], [c], *args, np.random.default_rng(5), force=True)
    assert np.array_equal(a.top, b.top)


def test_forest_budget_and_overlap():
    a = path_tree(3)
    b = complete_binary(3)
    ledger = BudgetLedger()
    lab = classify_forest([a, b], {"p2": 900, b.leaf_ids[0]: 3}, 1e4, 0.05, 0.5, 300.0, 1.0, 1e-6,
                          np.random.default_rng(0), force=True, ledger=ledger)
    assert ledger.total() == PrivacyBudget(1.0, 1e-6)
    assert lab.budget == PrivacyBudget(1.0, 1e-6)
    assert set(lab.ids) == set(a.ids) | set(b.ids)
    with pytest.raises(InputError):
        classify_forest([b, b], {}, 1.0, 0.05, 0.5, 3.0, 1.0, 1e-6, np.random.default_rng(0))
    with pytest.raises(InputError):
        classify_forest([], {}, 1.0, 0.05, 0.5, 3.0, 1.0, 1e-6, np.random.default_rng(0))


@given(small_trees(), st.integers(0, 2**32), st.floats(10, 2000))
@settings(max_examples=40)
def test_labels_upward_closed(parents, seed, tau):
    from dptree.tree_core import TreeShape

    t = TreeShape(parents)
    g = np.random.default_rng(seed)
    c = {u: int(g.integers(0, 3000)) for u in t.leaf_ids}
    lab = classify_tree(t, c, 5000.0, 0.1, 0.5, tau, 1.0, 1e-6, g, force=True)
    for k in np.flatnonzero(lab.top):
        assert lab.top[t.ancestors(int(k))].all()
    trans = transition_nodes(t, lab.top)
    covered = np.zeros(t.n_nodes, bool)
    for k in trans:
        covered[t.ancestors(int(k))] = True
    assert np.array_equal(covered, lab.top)


# ---------------------------------------------------------------- schedule


def test_schedule_ratio_values():
    beta, r = schedule_ratio(0.5)
    assert beta == pytest.approx(1 / 17, rel=1e-15) and r == pytest.approx(4 / 3, rel=1e-15)
    assert schedule_ratio(1.0)[0] == pytest.approx(1 / 11)
    assert schedule_normalizer(0.5) == pytest.approx(16.0)


def test_normalizer_is_series_limit():
    for a in (0.1, 0.5, 0.9):
        q = 1 / schedule_ratio(a)[1]
        i = np.arange(1, 200_001 if a == 0.1 else 201)
        assert math.fsum(i * q ** (i - 1)) == pytest.approx(schedule_normalizer(a), rel=1e-9)


def test_schedule_constraints():
    s = schedule_params(0.5, 1.0, 1e-6, 0.05, 2e6, 5e8, 12)
    beta = s.beta
    assert s.check() == []
    assert s.M_i[-1] >= s.M
    prev = np.concatenate([[s.M0], s.M_i[:-1]])
    assert np.allclose(prev, (1 + beta) * s.tau_i, rtol=1e-12)
    assert s.budget.eps <= 0.5 * (1 + 1e-12) and s.budget.delta <= 0.5e-6 * (1 + 1e-12)
    assert math.fsum(s.eta_i) < 0.05


def test_schedule_rejects_small_tau():
    with pytest.raises(PreconditionError):
        schedule_params(0.5, 1.0, 1e-6, 0.05, 100.0, 1e6, 12)
    s = schedule_params(0.5, 1.0, 1e-6, 0.05, 100.0, 1e6, 12, force=True)
    assert any(name == "threshold" for name, _, _ in s.check())


def test_threshold_minima_frozen():
    # frozen from a 40-digit evaluation
    assert closed_form_min_tau(0.5, 1.0, 1e-6, 0.05, 12) == pytest.approx(640767.2786397071, rel=1e-10)
    assert certified_min_tau(0.5, 1.0, 1e-6, 0.05, 12) == pytest.approx(1072133.4858285296, rel=1e-10)
    assert required_tau_min(0.5, 1.0, 1e-6, 0.05, 12) == pytest.approx(1072133.4858285296, rel=1e-10)


# ---------------------------------------------------------------- estimation


@pytest.fixture(scope="module")
def setup():
    t = complete_binary(6)
    tau = required_tau_min(0.5, 1.0, 1e-6, 0.05, t.d)
    return t, AccuracySpec.uniform(t, 0.5, 0.05, tau)


def test_refusal_names_minimum(setup):
    t, _ = setup
    spec = AccuracySpec.uniform(t, 0.5, 0.05, 1000.0)
    need = required_tau_min(0.5, 1.0, 1e-6, 0.05, t.d)
    with pytest.raises(PreconditionError) as ei:
        estimate(t, {}, spec, 1.0, 1e-6, np.random.default_rng(0))
    assert ei.value.required == pytest.approx(need)
    out = estimate(t, {}, spec, 1.0, 1e-6, np.random.default_rng(0), force=True)
    assert out.values.shape == (t.n_nodes,)


def test_estimate_values_on_ladder(setup):
    t, spec = setup
    c = {u: 10**5 * (k + 1) for k, u in enumerate(t.leaf_ids)}
    ledger = BudgetLedger()
    out, s = estimate(t, c, spec, 1.0, 1e-6, np.random.default_rng(2), ledger=ledger, return_schedule=True)
    allowed = np.concatenate([[s.M0], s.M_i])
    assert np.all(np.isin(out.values, allowed))
    assert s.M >= aggregate_exact(t, c).values[0]
    assert ledger.total().eps == pytest.approx(1.0) and ledger.total().delta == pytest.approx(1e-6)


def test_single_rung_two_valued(setup):
    t, spec = setup
    s = schedule_params(0.5, 1.0, 1e-6, 0.05, spec.tau_min, spec.tau_min * 0.6, t.d)
    assert s.ell == 1
    out = reduce_estimate(t, {t.leaf_ids[0]: int(spec.tau_min * 0.5)}, s, np.random.default_rng(0))
    assert set(np.unique(out.values)) <= {s.M0, s.M_i[0]}


@given(st.integers(0, 2**32), st.integers(0, 10**7))
@settings(max_examples=25)
def test_root_bound_dominates(seed, heavy):
    t = complete_binary(4)
    tau = required_tau_min(0.5, 1.0, 1e-6, 0.05, t.d)
    spec = AccuracySpec.uniform(t, 0.5, 0.05, tau)
    c = {t.leaf_ids[1]: heavy}
    _, s = estimate(t, c, spec, 1.0, 1e-6, np.random.default_rng(seed), return_schedule=True)
    assert s.M >= heavy


# ---------------------------------------------------------------- clamping


def test_clamp_noop_on_exact():
    t = complete_binary(5)
    c = {u: k for k, u in enumerate(t.leaf_ids)}
    w = aggregate_exact(t, c).values
    out = clamp_to_mrmse(t, c, w, 1.0, 1e-6, np.random.default_rng(0))
    assert np.array_equal(out.values, w)


@given(st.integers(0, 2**32), st.floats(-1e7, 1e7))
@settings(max_examples=50)
def test_clamp_never_worse(seed, shift):
    t = complete_binary(4)
    g = np.random.default_rng(seed)
    c = {u: int(g.integers(0, 1000)) for u in t.leaf_ids}
    w = aggregate_exact(t, c).values
    raw = w + shift * g.random(t.n_nodes)
    ledger = BudgetLedger()
    out = clamp_to_mrmse(t, c, raw, 1.0, 1e-6, g, ledger=ledger).values
    R = clamp_radius(1.0, 1e-6, t.d)
    assert np.all(np.abs(out - w) <= np.abs(raw - w) + 1e-9)
    assert np.all(np.abs(out - w) <= 2 * R * (1 + 1e-12))
    assert ledger.total() == PrivacyBudget(0.5, 5e-7)


def test_clamp_input_forms():
    t = complete_binary(3)
    w = aggregate_exact(t, {}).values
    a = clamp_to_mrmse(t, {}, dict(zip(t.ids, w)), 1.0, 1e-6, np.random.default_rng(0))
    assert np.array_equal(a.values, w)
    with pytest.raises(InputError):
        clamp_to_mrmse(t, {}, w[:-1], 1.0, 1e-6, np.random.default_rng(0))
    with pytest.raises(InputError):
        clamp_to_mrmse(t, {}, {"1": 0.0}, 1.0, 1e-6, np.random.default_rng(0))


def test_estimate_clamped_budget():
    t = complete_binary(4)
    tau = required_tau_min(0.5, 0.5, 5e-7, 0.05, t.d)
    spec = AccuracySpec.uniform(t, 0.5, 0.05, tau)
    ledger = BudgetLedger()
    estimate_clamped(t, {}, spec, 1.0, 1e-6, np.random.default_rng(0), ledger=ledger)
    tot = ledger.total()
    assert tot.eps == pytest.approx(1.0) and tot.delta == pytest.approx(1e-6)


def test_spec_validation():
    t = complete_binary(3)
    with pytest.raises(InputError):
        AccuracySpec.uniform(t, 1.5, 0.05, 10)
    with pytest.raises(InputError):
        AccuracySpec.from_mapping(t, 0.5, 0.05, {"1": 3.0})
    s = AccuracySpec.from_mapping(t, 0.5, 0.05, {"1": 3.0}, default=7.0)
    assert s.tau_min == 3.0 and s.tau_max == 7.0
