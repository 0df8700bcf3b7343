import itertools

import numpy as np
import pytest


def tour_cost(w, order):
    n = len(order)
    return sum(w[order[t]][order[(t + 1) % n]] for t in range(n))


def optimal_tours(w):
    """Plain enumeration of all visit orders; independent of the package's vectorized helper."""
    n = len(w)
    best, tours = None, []
    for perm in itertools.permutations(range(n)):
        c = tour_cost(w, perm)
        if best is None or c < best - 1e-12:
            best, tours = c, [perm]
        elif abs(c - best) <= 1e-12:
            tours.append(perm)
    return best, tours


def all_bits(n):
    """Rows are bitstrings; column q is qubit q (bit q of the row index)."""
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
