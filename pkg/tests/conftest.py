import pytest

from kinknet import data_path
from kinknet.graph import load_graph

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def g0():
    return load_graph(data_path("g0.json"))


@pytest.fixture
def acceptance_report():
    def report(number, text, passed):
        line = f"[{'PASS' if passed else 'FAIL'}] AC{number:<3} {text}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
