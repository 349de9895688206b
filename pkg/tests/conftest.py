import os

import pytest

from interpnorm.kcalc import default_corpus

os.environ.setdefault("INTERPNORM_THREADS", "2")

ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def corpus():
    return default_corpus()


@pytest.fixture
def criterion_log():
    """Record one verdict line per acceptance criterion; echoed in the terminal summary."""
    def log(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
