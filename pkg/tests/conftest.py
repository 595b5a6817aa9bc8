import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion."""
    def _record(number: int, ok: bool, detail: str):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
