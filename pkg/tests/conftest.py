import numpy as np
import pytest

from mscap.benchmarks import get_benchmark

ACCEPTANCE_LINES = []


class ScriptedRNG:
    """Stand-in for numpy's Generator returning a fixed uniform value."""

    def __init__(self, value=0.5, integer=0):
        self.value = value
        self.integer = integer

    def random(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def uniform(self, low=0.0, high=1.0, size=None):
        u = self.random(size)
        return low + (high - low) * u

    def integers(self, high, size=None):
        if size is None:
            return self.integer
        return np.full(size, self.integer)


@pytest.fixture
def sphere2():
    return get_benchmark("sphere", 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
