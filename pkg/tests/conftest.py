import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("twoscale", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("twoscale")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record(line):
    """Store a PASS/FAIL line for the terminal summary (and echo it for ``-s`` runs)."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
