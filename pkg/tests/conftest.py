import pytest

_RESULTS: dict = {}


@pytest.fixture
def report():
    """Record the outcome of an acceptance criterion for the summary."""

    def record(criterion: str, ok: bool, detail: str = "") -> bool:
        _RESULTS[criterion] = (ok, detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS, key=lambda c: (len(c), c)):
        ok, detail = _RESULTS[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
