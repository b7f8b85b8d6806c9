import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_criterion(request):
    """Record ``(passed, detail)`` for the terminal summary and assert on it."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
