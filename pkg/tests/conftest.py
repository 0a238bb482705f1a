import sys
import numpy as np
import pytest
from hypothesis import settings

from mocapval.config import load_config

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# Euler angle sample reported by a commercial IMU suit around a representation flip
FLIP_SAMPLE = np.array([
    [67.41, 0.00, -80.14],
    [78.76, 0.00, -80.76],
    [88.37, -180.00, 99.41],
    [76.19, 180.00, 100.01],
    [67.74, -180.00, 100.70],
    [61.37, 180.00, 101.43],
    [56.43, -180.00, 102.16],
    [52.25, -180.00, 102.90],
])


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def segments(config):
    return config.topology("segments")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
