from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from norma import load_corpus

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def running():
    return load_corpus("running")


@pytest.fixture(scope="session")
def trees():
    return load_corpus("trees")


@pytest.fixture(scope="session")
def lengthp():
    return load_corpus("lengthp")


@pytest.fixture(scope="session")
def polrunning():
    return load_corpus("polrunning")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
