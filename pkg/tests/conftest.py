"""Shared test plumbing: the acceptance-criteria result banner."""

import pytest

_criteria = {}


@pytest.fixture
def criterion_log():
    """Record one acceptance criterion outcome for the end-of-run banner."""

    def record(number: int, status: str, detail: str = ""):
        _criteria[number] = (status, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, detail = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status:4s} {detail}")
