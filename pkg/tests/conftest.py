from pathlib import Path

import numpy as np
import pytest

from sparse_gi import from_edge_list

FIXTURES = Path(__file__).parent / "fixtures"

P3_EDGES = [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]


@pytest.fixture
def p3():
    return from_edge_list(P3_EDGES)


@pytest.fixture
def p3_sub():
    """Rows {0, 1}, columns {1, 2} of the path graph."""
    return from_edge_list(P3_EDGES, [0, 1], [1, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
