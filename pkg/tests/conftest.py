import numpy as np
import pytest

from discgan.data import TableSchema
from discgan.standin import default_schema_dict, default_standin_spec, make_standin_dataset


@pytest.fixture(scope="session")
def standin_table():
    return make_standin_dataset(default_standin_spec(), 600, np.random.default_rng(11))


@pytest.fixture(scope="session")
def discgan_schema():
    return TableSchema.from_dict(default_schema_dict("discgan"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_line():
    """Record a one-line verdict that is echoed in the terminal summary."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    def note(text):
        _ACCEPTANCE_LINES.append(f"  note: {text}")
        print(text)

    record.note = note
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
