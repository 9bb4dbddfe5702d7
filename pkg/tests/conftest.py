import pytest

_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one-line verdicts that are printed after the test summary."""

    def record(label: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
