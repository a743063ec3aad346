import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Record one acceptance line; printed in the terminal summary."""
    def _record(criterion: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
