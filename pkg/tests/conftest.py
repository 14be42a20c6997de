import math

import pytest
from hypothesis import HealthCheck, settings

from atomcomb.core import TrapConfig

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")

TWO_PI = 2 * math.pi


@pytest.fixture
def iso():
    return TrapConfig.from_hz(125.0)


@pytest.fixture
def aniso():
    return TrapConfig.from_hz(125.0, 75.0, 25.0)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one acceptance line: ``report(number, passed, text)``."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def _report(number, passed, text):
        status = {True: "PASS", False: "FAIL"}.get(passed, passed)
        line = f"criterion {number:>2} {status:<11} {text}"
        lines.append((number, line))
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda item: item[0]):
            terminalreporter.write_line(line)
