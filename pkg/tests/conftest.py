import pytest

CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        CRITERIA[number] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
