import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("kitetrack", max_examples=60, deadline=None)
settings.load_profile("kitetrack")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_unit(rng, upper=True):
    p = unit(rng.standard_normal(3))
    if upper:
        p[2] = abs(p[2])
    return p


@pytest.fixture
def deg():
    return math.radians


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
