"""Collects one verdict line per acceptance criterion and prints them at the end of the run."""

import pytest

_LINES: dict[int, str] = {}


class AcceptanceLog:
    def record(self, number: int, passed: bool, text: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
        _LINES[number] = line
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
