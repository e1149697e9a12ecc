import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_trees():
    """Hypothesis strategy: random rooted trees given as parent maps."""
    from hypothesis import strategies as st

    @st.composite
    def build(draw):
        n = draw(st.integers(1, 40))
        parents = {"n0": None}
        for k in range(1, n):
            parents[f"n{k}"] = f"n{draw(st.integers(0, k - 1))}"
        return parents

    return build()


ACCEPTANCE = []


def record(criterion, ok, detail):
    """Log one acceptance line; shown in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'} C{criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
