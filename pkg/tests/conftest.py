import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apkin.phase_space import VelocityGrid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"

# lines recorded by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def vgrid16():
    return VelocityGrid(16, 8.0)


@pytest.fixture(scope="session")
def vgrid32():
    return VelocityGrid(32, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
