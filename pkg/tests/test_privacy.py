import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dptree.errors import InputError
from dptree.privacy import BudgetLedger, PrivacyBudget, compose_basic, compose_parallel, group_privacy_factor

B = PrivacyBudget


def test_basic_examples():
    assert compose_basic([B(1, 0), B(1, 0)]) == B(2, 0)
    assert compose_basic([B(0, 0)]) == B(0, 0)
    r = compose_basic([B(0.5, 0.1), B(0.5, 0.2), B(1, 0)])
    assert r.eps == 2 and r.delta == pytest.approx(0.3)
    assert compose_basic([B(1, 0.7), B(1, 0.7)]).delta == 1.0


def test_parallel_examples():
    assert compose_parallel([B(1, 0.1), B(2, 0.05)]) == B(2, 0.1)
    assert compose_parallel([B(1, 0)]) == B(1, 0)
    assert compose_parallel([B(0, 0), B(0, 0)]) == B(0, 0)


def test_empty_and_invalid():
    with pytest.raises(InputError):
        compose_basic([])
    with pytest.raises(InputError):
        compose_parallel([])
    with pytest.raises(InputError):
        B(-1, 0)
    with pytest.raises(InputError):
        B(1, 1.5)


def test_group_privacy():
    assert group_privacy_factor(B(1, 0), 3) == (3, 0)
    assert group_privacy_factor(B(1, 0.01), 1) == pytest.approx((1, 0.01))
    e, d = group_privacy_factor(B(0.1, 1e-6), 10)
    assert e == pytest.approx(1.0)
    assert d == pytest.approx(1.633799399966362e-05, rel=1e-12)  # frozen from a 40-digit evaluation
    with pytest.raises(InputError):
        group_privacy_factor(B(1, 0), 0)


def test_ledger_total():
    led = BudgetLedger()
    assert led.total() == B(0, 0)
    led.spend("a", B(0.5, 1e-6))
    led.spend("b", B(0.5, 1e-6))
    assert led.total() == B(1.0, 2e-6) and len(led) == 2


budgets = st.builds(B, st.floats(0, 10), st.floats(0, 0.3))


@given(st.lists(budgets, min_size=1, max_size=6), st.randoms())
def test_basic_is_order_free(bs, rnd):
    shuffled = list(bs)
    rnd.shuffle(shuffled)
    a, b = compose_basic(bs), compose_basic(shuffled)
    assert a.eps == pytest.approx(b.eps) and a.delta == pytest.approx(b.delta)


@given(budgets, budgets, budgets)
def test_basic_associative(x, y, z):
    l = compose_basic([compose_basic([x, y]), z])
    r = compose_basic([x, compose_basic([y, z])])
    assert l.eps == pytest.approx(r.eps) and l.delta == pytest.approx(r.delta)


@given(st.lists(budgets, min_size=1, max_size=5))
def test_parallel_idempotent(bs):
    assert compose_parallel(bs + bs) == compose_parallel(bs)


@given(budgets)
def test_group_identity(b):
    e, d = group_privacy_factor(b, 1)
    assert e == pytest.approx(b.eps) and d == pytest.approx(b.delta)
