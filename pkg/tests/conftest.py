"""Shared fixtures; collects acceptance verdict lines for the run summary."""

import pytest

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        def criterion_number(line):
            return int(line.split(":")[0].split()[-1])
        for line in sorted(_acceptance_lines, key=criterion_number):
            terminalreporter.write_line(line)
