import pytest

_LINES: list = []


@pytest.fixture
def accept():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(tag: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
