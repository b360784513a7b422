import math

import pytest
from hypothesis import HealthCheck, settings

from semiflow_escape.gibbs import bernoulli_potential, equilibrium_state
from semiflow_escape.sft import full_shift, golden_mean_shift

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def full2():
    return full_shift(2)


@pytest.fixture(scope="session")
def golden():
    return golden_mean_shift()


@pytest.fixture(scope="session")
def mu_half(full2):
    return equilibrium_state(full2)


@pytest.fixture(scope="session")
def mu_skew(full2):
    return equilibrium_state(full2, bernoulli_potential(full2, [0.3, 0.7]))


@pytest.fixture(scope="session")
def mu_parry(golden):
    return equilibrium_state(golden)


GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
