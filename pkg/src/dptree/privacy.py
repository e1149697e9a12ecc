"""Privacy-budget arithmetic: basic and parallel composition, group privacy.

The helpers only add numbers.  Parallel composition is valid only when the
composed mechanisms read disjoint leaves; callers state that partition, it
cannot be checked here.
"""

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import InputError


@dataclass(frozen=True)
class PrivacyBudget:
    eps: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise InputError(f"eps must be a finite non-negative number, got {self.eps!r}")
        if not 0 <= self.delta <= 1:
            raise InputError(f"delta must lie in [0, 1], got {self.delta!r}")

    def __add__(self, other: "PrivacyBudget") -> "PrivacyBudget":
        return compose_basic([self, other])


def _nonempty(budgets):
    budgets = list(budgets)
    if not budgets:
        raise InputError("need at least one budget")
    return budgets


def compose_basic(budgets: Iterable[PrivacyBudget]) -> PrivacyBudget:
    """Sequential composition: eps and delta add up (delta capped at 1)."""
    budgets = _nonempty(budgets)
    return PrivacyBudget(
        math.fsum(b.eps for b in budgets), min(1.0, math.fsum(b.delta for b in budgets))
    )


def compose_parallel(budgets: Iterable[PrivacyBudget]) -> PrivacyBudget:
    """Mechanisms on disjoint inputs: the worst eps and the worst delta."""
    budgets = _nonempty(budgets)
    return PrivacyBudget(max(b.eps for b in budgets), max(b.delta for b in budgets))


class BudgetLedger:
    """Running record of ``(label, PrivacyBudget)`` charges, composed sequentially."""

    def __init__(self):
        self.entries = []

    def spend(self, label: str, budget: PrivacyBudget) -> None:
        self.entries.append((label, budget))

    def total(self) -> PrivacyBudget:
        if not self.entries:
            return PrivacyBudget(0.0, 0.0)
        return compose_basic(b for _, b in self.entries)

    def __len__(self):
        return len(self.entries)


def group_privacy_factor(budget: PrivacyBudget, k: int):
    """Guarantee between inputs at L1 distance ``k``.

    Returns ``(k * eps, delta * (e^{k eps} - 1) / (e^eps - 1))``; the second
    term tends to ``k * delta`` as eps goes to 0.
    """
    if int(k) != k or k < 1:
        raise InputError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    eps, delta = budget.eps, budget.delta
    if eps == 0:
        return 0.0, k * delta
    return k * eps, delta * (math.expm1(k * eps) / math.expm1(eps))
