import numpy as np
import pytest
from hypothesis import strategies as st

from covertcomm import bsc_pair


@pytest.fixture
def desk_pair():
    """Main BSC(0.05), warden BSC(0.4)."""
    return bsc_pair(0.05, 0.4)


def distributions(min_size=2, max_size=6, floor=1e-3):
    """Strictly positive probability vectors."""

    def build(raw):
        v = np.asarray(raw, dtype=float) + floor
        return v / v.sum()

    return st.integers(min_size, max_size).flatmap(
        lambda k: st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k).map(build)
    )


def warden_pairs(min_size=2, max_size=6):
    """(Q1, Q0) with Q0 bounded away from zero."""
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.tuples(
            st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k),
            st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k),
        )
    ).map(lambda t: (np.asarray(t[0]) / sum(t[0]) if sum(t[0]) > 0 else np.eye(len(t[0]))[0], np.asarray(t[1]) / sum(t[1])))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
