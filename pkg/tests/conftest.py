import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tdsampling import Medium, Pulse, TimeGrid, build_sampling_grid, build_spherical_array

settings.register_profile(
    "repo", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

# filled by test_acceptance, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def pulse():
    return Pulse()


@pytest.fixture(scope="session")
def medium():
    return Medium()


@pytest.fixture(scope="session")
def tgrid():
    return TimeGrid()


@pytest.fixture(scope="session")
def sensors():
    return build_spherical_array(5.0, 16, 16)


@pytest.fixture(scope="session")
def grid45():
    return build_sampling_grid((-2.0,) * 3, (2.0,) * 3, 45)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
