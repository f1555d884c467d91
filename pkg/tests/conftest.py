import pytest

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store ``(criterion, passed, detail)`` for the end-of-run summary."""
    def _record(number, name, passed, detail=""):
        _ACCEPTANCE[number] = (name, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        name, passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(
            f"{'PASS' if passed else 'FAIL'}  {number:>2}. {name}  {detail}")
