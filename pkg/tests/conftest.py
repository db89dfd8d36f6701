import pytest
from hypothesis import settings

from mcautotune.model import PlatformConfig, ProblemSpec

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def platform():
    return PlatformConfig(nd=1, nu=1, np=4, gmt=4)


@pytest.fixture
def size8():
    return ProblemSpec(8)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
