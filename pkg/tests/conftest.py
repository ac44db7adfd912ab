import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from synergies.arm import ArmModel
from synergies.exploration import ExplorationConfig, run_exploration
from synergies.solver import BasisSet

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# lines printed by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def model():
    return ArmModel()


@pytest.fixture(scope="session")
def random_archive(model):
    return run_exploration(model, ExplorationConfig(signal_class="lowpass_random", count=90))


@pytest.fixture(scope="session")
def min_jerk_archive(model):
    return run_exploration(model, ExplorationConfig(signal_class="min_jerk", count=100))


@pytest.fixture(scope="session")
def random_basis(random_archive):
    return BasisSet.from_archive(random_archive)


@pytest.fixture(scope="session")
def min_jerk_basis(min_jerk_archive):
    return BasisSet.from_archive(min_jerk_archive)


def smooth_rest_trajectory(q0, amp, freq, t):
    """q0 + amp (1 - cos(2 pi f t)) / 2 with exact derivatives; at rest at t=0 and t=1/f."""
    w = 2 * np.pi * np.asarray(freq)
    c = np.cos(np.outer(t, w))
    s = np.sin(np.outer(t, w))
    q = q0 + amp * (1 - c) / 2
    qd = amp * w * s / 2
    qdd = amp * w**2 * c / 2
    return q, qd, qdd
