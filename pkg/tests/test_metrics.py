import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dptree.baselines import laplace_tree
from dptree.errors import InputError
from dptree.hierarchy import AccuracySpec
from dptree.metrics import (
    accuracy_check,
    default_suite,
    error_report,
    mrmse_over_suite,
    rel_bound,
    rel_kappa,
    rmse_alpha,
    rmse_alpha_mc,
    wilson_interval,
    wilson_margin,
)
from dptree.tree_core import aggregate_exact, complete_binary


def exact(tree, counts, rng):
    return aggregate_exact(tree, counts)


def plus5(tree, counts, rng):
    return aggregate_exact(tree, counts).values + 5.0


def test_exact_and_offset():
    t = complete_binary(3)
    assert error_report(exact, t, {}, 0.0, 10, 0).mrmse == 0.0
    rep = error_report(plus5, t, {}, 0.0, 10, 0)
    assert np.allclose(rep.rmse, 5.0) and np.allclose(rep.bias, 5.0)


def test_alpha_slack():
    t = complete_binary(2)
    c = {t.leaf_ids[0]: 10}
    # node weights 10, 10, 0: offset 5 within alpha=0.5 of 10, but not of 0
    rep = error_report(plus5, t, c, 0.5, 4, 0)
    assert rep.rmse.tolist() == [0.0, 0.0, 5.0]


def test_laplace_rmse_oracle():
    t = complete_binary(3)
    mech = lambda tr, c, r: laplace_tree(tr, c, 1.0, r)
    est = rmse_alpha_mc(mech, t, {}, "1", 0.0, 20_000, 1)
    assert abs(est.value - 3 * math.sqrt(2)) < 4 * est.stderr
    assert est.trials == 20_000


def test_rmse_alpha_monotone_in_alpha(rng):
    z = 100 + rng.laplace(0, 20, 5000)
    vals = [rmse_alpha(z, 100.0, a).value for a in (0.0, 0.1, 0.2, 0.5)]
    assert all(x >= y for x, y in zip(vals, vals[1:]))
    with pytest.raises(InputError):
        rmse_alpha([], 1.0)


def test_rel_kappa_example():
    assert rel_kappa([5.0, 15.0], 10.0, 20.0) == pytest.approx(0.25)
    assert rel_kappa([1.0], 0.0, 2.0) == 0.5
    with pytest.raises(InputError):
        rel_kappa([1.0], 0.0, 0.0)


@given(st.floats(0, 1e4), st.floats(0.5, 100), st.floats(0, 0.9), st.integers(0, 2**32))
def test_rel_bound_holds(z, kappa, alpha, seed):
    g = np.random.default_rng(seed)
    est = z + g.laplace(0, 10, 200)
    rmse = rmse_alpha(est, z, alpha).value
    assert rel_kappa(est, z, kappa) <= rel_bound(rmse, kappa, alpha) + 1e-9


def test_wilson():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.02
    assert wilson_margin(50, 100) == pytest.approx(math.sqrt(0.25 / 100 + 1 / 40_000) / 1.01, rel=1e-12)
    lo, hi = wilson_interval(30, 100, z=2)
    assert lo < 0.3 < hi


def test_suite():
    t = complete_binary(3)
    rep = mrmse_over_suite(plus5, [(t, {})], 0.0, 3, 0)
    assert rep.mrmse == 5.0 and len(rep.reports) == 1
    with pytest.raises(InputError):
        mrmse_over_suite(plus5, [], 0.0, 3, 0)
    suite, labels = default_suite(t)
    assert len(suite) == len(labels) == 5


def test_failure_rate_oracle():
    t = complete_binary(2)
    b = 2.0  # Laplace scale d/eps
    mech = lambda tr, c, r: laplace_tree(tr, c, 1.0, r)
    spec = AccuracySpec.uniform(t, 0.5, 0.05, 4.0)
    rep = accuracy_check(mech, t, {}, spec, 40_000, 3)
    p = math.exp(-0.5 * 4.0 / b)
    for rate, m in zip(rep.failure_rate, rep.failure_margin()):
        assert abs(rate - p) < 4 * m
    assert rep.flagged() == tuple(t.ids)  # eta far below exp(-1)


def test_determinism_and_prefix():
    t = complete_binary(3)
    mech = lambda tr, c, r: laplace_tree(tr, c, 1.0, r)
    a = error_report(mech, t, {}, 0.0, 300, 9, chunk=7)
    b = error_report(mech, t, {}, 0.0, 300, 9, chunk=300)
    assert np.allclose(a.rmse, b.rmse, rtol=1e-12)
    with pytest.raises(InputError):
        error_report(mech, t, {}, 0.0, 0, 9)
