from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[CRITERIA_KEY] = []


@pytest.fixture(scope="session")
def criteria(pytestconfig):
    """Collects one pass/fail line per acceptance criterion; printed at the end of the run."""
    return pytestconfig.stash[CRITERIA_KEY]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
