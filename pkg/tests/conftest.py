import math
import random

import pytest

from newton_atlas import Polynomial, sample_roots


@pytest.fixture
def rng():
    return random.Random(0xA17A5)


def random_disk_points(rand: random.Random, n: int) -> list[complex]:
    pts = []
    for _ in range(n):
        r = math.sqrt(rand.random())
        t = 2.0 * math.pi * rand.random()
        pts.append(complex(r * math.cos(t), r * math.sin(t)))
    return pts


@pytest.fixture(scope="session")
def small_poly():
    return Polynomial.from_roots(sample_roots(12, 20260822))


# One line per acceptance criterion, printed after the run so the
# verdicts stay visible even though pytest captures in-test output.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
