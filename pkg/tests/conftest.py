"""Shared test plumbing.

The acceptance tests report one PASS/FAIL line per criterion.  Stdout is
captured by pytest, so the lines are collected here and replayed in the
terminal summary where they stay visible in a plain ``pytest -v`` run.
"""

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Callable that records a criterion verdict, prints it, and asserts it."""

    def _report(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
