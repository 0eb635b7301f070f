import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the one-line verdict of an acceptance criterion for the summary."""
    def record(number: int, ok: bool, detail: str) -> bool:
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_CRITERIA[number])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
