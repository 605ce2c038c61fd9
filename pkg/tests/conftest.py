import pytest

from helpers import worked_graph, worked_grammar, worked_rsm


@pytest.fixture
def graph():
    return worked_graph()


@pytest.fixture
def grammar():
    return worked_grammar()


@pytest.fixture
def rsm():
    return worked_rsm()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
