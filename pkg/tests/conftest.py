import importlib.resources

import pytest

from socopf.matpower import parse_case
from socopf.network import build_network


def case_text(name: str) -> str:
    return (
        importlib.resources.files("socopf") / "cases" / f"{name}.m"
    ).read_text()


TWO_BUS_CASE = """
function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0  0  0 0 1 1 0 230 1 1.1 0.9;
    2 1 10 2  0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 50 -50 1 100 1 100 0;
];
mpc.branch = [
    1 2 0.01 0.1 0.02 50 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0.1 10 0;
];
"""


@pytest.fixture(scope="session")
def case9_net():
    return build_network(parse_case(case_text("case9"), name="case9"))


@pytest.fixture(scope="session")
def case14_net():
    return build_network(parse_case(case_text("case14"), name="case14"))


@pytest.fixture()
def two_bus_net():
    return build_network(parse_case(TWO_BUS_CASE, name="case2"))
