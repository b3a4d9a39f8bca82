import os

import pytest

from agewise.netlist import CellLibrary, read_netlist
from agewise.sta import elaborate

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def lib():
    return CellLibrary()


@pytest.fixture(scope="session")
def inv1():
    return read_netlist(fixture_path("inv1.nlf"))


@pytest.fixture(scope="session")
def five():
    return read_netlist(fixture_path("five_gate.nlf"))


@pytest.fixture(scope="session")
def five_graph(five, lib):
    return elaborate(five, lib)
