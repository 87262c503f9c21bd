import os

import numpy as np
import pytest

from bergman_lab.gaf import Configuration


def random_disc_points(rng, n, r_max=0.95):
    return np.sqrt(rng.uniform(0, r_max**2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def poisson_config(rng):
    """Synthetic configuration with roughly the GAF count profile (for plumbing tests)."""
    return Configuration(random_disc_points(rng, 400, 0.99), 0.99)


def cache_dir():
    """Optional sample cache shared by the Monte Carlo suites (``BERGMAN_LAB_CACHE``)."""
    return os.environ.get("BERGMAN_LAB_CACHE") or None


CRITERIA_LINES = []


@pytest.fixture
def report_criterion(capsys):
    """Print one verdict line per acceptance criterion, bypassing output capture."""

    def emit(number, title, passed, detail):
        line = f"CRITERION {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        CRITERIA_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
