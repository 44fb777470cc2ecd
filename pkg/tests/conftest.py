import numpy as np
import pytest

from gridfuse.grid import GroundTruthMap
from gridfuse.sensor import Neighborhood, SensorModel, make_uniform_de


@pytest.fixture
def nh3():
    return Neighborhood.square(3)


@pytest.fixture
def de09(nh3):
    return make_uniform_de(0.9, nh3)


@pytest.fixture
def sensor09():
    return SensorModel.uniform(0.9, "square3")


def truth_from(rows):
    return GroundTruthMap(np.array(rows, dtype=np.int8))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
