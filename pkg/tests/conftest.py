import numpy as np
import pytest

from chipplace.geometry import Chiplet, Placement
from chipplace.system import ChipletSpec, SystemSpec

HOT_DIMS = [(10, 10), (10, 10), (8, 12), (12, 8), (6, 6), (6, 6), (8, 8), (8, 8)]
HOT_POWER = [750, 750, 625, 625, 150, 150, 300, 300]
HOT_NETS = [(0, 1, 8), (0, 4, 6), (1, 5, 6), (2, 3, 8), (2, 6, 4), (3, 7, 4), (0, 2, 3), (1, 3, 3)]


def eight_chiplet_system(power_scale: float = 1.0) -> SystemSpec:
    chips = [ChipletSpec(f"c{i}", float(w), float(h), p * power_scale)
             for i, ((w, h), p) in enumerate(zip(HOT_DIMS, HOT_POWER))]
    m = np.zeros((8, 8), dtype=int)
    for i, j, w in HOT_NETS:
        m[i, j] = m[j, i] = w
    return SystemSpec(chips, m.tolist(), 45.0)


@pytest.fixture
def hot_system():
    return eight_chiplet_system()


@pytest.fixture
def cool_system():
    return eight_chiplet_system(0.1)


def square(i, side=10.0, power=0.0):
    return Chiplet(i, side, side, power)


def place(chips, centers, size=45.0):
    return Placement.build(chips, centers, size)


# one PASS/FAIL line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
