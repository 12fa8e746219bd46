import pytest

# Filled by tests/test_acceptance.py; one (criterion, passed, detail) tuple per check.
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda line: line[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {criterion:>2}: {detail}")
