import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one acceptance line; it is echoed immediately and again in the terminal summary."""
    def record(line: str) -> None:
        _VERDICTS.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
