import math

import pytest

from trapforge import axial as ax
from trapforge import electrostatics as es
from trapforge import geometry as geo
from trapforge.constants import MHZ, UM


@pytest.fixture(scope="session")
def ion():
    return es.IonSpecies.yb171()


@pytest.fixture(scope="session")
def drive450():
    return es.RfDrive(450.0, 2 * math.pi * 55 * MHZ)


@pytest.fixture(scope="session")
def drive500():
    return es.RfDrive(500.0, 2 * math.pi * 55 * MHZ)


@pytest.fixture(scope="session")
def example_wire():
    return geo.FiveWireParams(a=60 * UM, b=300 * UM, c=150 * UM)


@pytest.fixture(scope="session")
def outer_layout(example_wire):
    return geo.TrapLayout(example_wire, "outer_segmented", E=220 * UM, W=220 * UM, C_w=220 * UM)


@pytest.fixture(scope="session")
def centre_layout(example_wire):
    return geo.TrapLayout(example_wire, "centre_segmented", E=60 * UM, W=60 * UM, C_w=60 * UM)


@pytest.fixture(scope="session")
def outer_start():
    return ax.VoltageSet(endcap=30.0, wedge=-34.0, control=0.0)


@pytest.fixture(scope="session")
def outer_end():
    return ax.VoltageSet(endcap=30.0, wedge=50.0, control=-48.0)


@pytest.fixture(scope="session")
def centre_start():
    return ax.VoltageSet(endcap=8.0, wedge=0.0, control=0.0)


@pytest.fixture(scope="session")
def centre_end():
    return ax.VoltageSet(endcap=8.0, wedge=4.0, control=-3.8)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
