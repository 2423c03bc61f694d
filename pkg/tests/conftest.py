"""Shared fixtures: cached prime tables and the acceptance report hook."""

import pytest

from eulermax.primes import sieve

# Acceptance tests append "ACCEPTANCE nn: PASS/FAIL ..." lines here; the
# terminal-summary hook below prints them after the run so they are visible
# even when pytest captures per-test stdout.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def table_1e4():
    return sieve(10_000)


@pytest.fixture(scope="session")
def table_1e5():
    return sieve(100_000)


@pytest.fixture(scope="session")
def table_1e6():
    return sieve(1_000_000)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
