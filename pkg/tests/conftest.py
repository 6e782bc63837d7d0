import pathlib

import numpy as np
import pytest

from twocolprobe.generators import reference_system

DATA = pathlib.Path(__file__).parent / "data"

T, W, X, Y, Z = range(5)


@pytest.fixture
def reference():
    return reference_system()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def same_content(a, b):
    """Field-by-field equality of two instances (names, nonzeros, senses, bounds, types)."""
    return (
        a.name == b.name
        and a.row_names == b.row_names
        and a.col_names == b.col_names
        and a.sense == b.sense
        and a.matrix.rows == b.matrix.rows
        and np.array_equal(a.rhs, b.rhs)
        and np.array_equal(a.lower, b.lower)
        and np.array_equal(a.upper, b.upper)
        and np.array_equal(a.objective, b.objective)
        and np.array_equal(a.is_integer, b.is_integer)
        and a.obj_offset == b.obj_offset
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
