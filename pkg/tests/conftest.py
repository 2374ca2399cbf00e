from fractions import Fraction

import pytest
from hypothesis import strategies as st

# filled by tests/test_acceptance.py; printed once at the end of the run
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}

values_st = st.fractions(min_value=0, max_value=20, max_denominator=6)
streams_st = st.lists(values_st, min_size=1, max_size=12)


@pytest.fixture
def f():
    return Fraction


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, line = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {line}")
