import pytest
from hypothesis import HealthCheck, settings

from periodlab.hp_kernel import PrecisionBudget
from periodlab.modular_forms import make_delta, make_theta, make_zero

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def delta():
    return make_delta()


@pytest.fixture(scope="session")
def theta():
    return make_theta(1, 2)


@pytest.fixture(scope="session")
def zero():
    return make_zero()


@pytest.fixture(scope="session")
def b30():
    return PrecisionBudget(30)


@pytest.fixture(scope="session")
def b40():
    return PrecisionBudget(40)


ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
