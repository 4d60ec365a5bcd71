import numpy as np
import pytest

from netsense.edges import RAW, EdgeTable, aggregate


def random_raw_table(rng, n_rows, n_vertices):
    if n_rows == 0:
        return EdgeTable([], [], None, RAW, n_vertices)
    return EdgeTable(rng.integers(0, n_vertices, n_rows), rng.integers(0, n_vertices, n_rows),
                     None, RAW, n_vertices)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def abc_table():
    """a->b, a->b, b->a with a=0, b=1."""
    return EdgeTable([0, 0, 1], [1, 1, 0], None, RAW, 2)


@pytest.fixture
def weighted_table():
    """a->b (3), a->c (2), b->c (1) as an aggregated table over a, b, c."""
    return aggregate(EdgeTable([0, 0, 0, 0, 0, 1], [1, 1, 1, 2, 2, 2], None, RAW, 3))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
