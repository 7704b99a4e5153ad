import math

import pytest

from socopf.errors import DisconnectedGraph, NonpositiveReactance
from socopf.matpower import parse_case
from socopf.network import ANGLE_CAP, build_network, chords, scale_loads, spanning_tree

from conftest import TWO_BUS_CASE, case_text


def test_two_bus_charging_split(two_bus_net):
    br = two_bus_net.branches[0]
    assert br.r == 0.01
    assert br.x == 0.1
    assert br.b_s == pytest.approx(0.01)
    assert br.b_r == pytest.approx(0.01)
    assert br.k_tilde == pytest.approx(0.25)  # (50/100)^2
    assert br.theta_max == ANGLE_CAP


def test_case9_topology(case9_net):
    net = case9_net
    assert net.n_bus == 9
    assert net.n_branch == 9
    a_plus = net.a_plus()
    for br in net.branches:
        col = [a_plus.get(n, {}).get(br.index) for n in range(net.n_bus)]
        nz = [v for v in col if v]
        assert sorted(nz) == [-1, 1]
    a_minus = net.a_minus()
    for br in net.branches:
        col = [a_minus.get(n, {}).get(br.index) for n in range(net.n_bus)]
        nz = [v for v in col if v is not None]
        assert nz == [-1]


def test_nonpositive_reactance():
    text = TWO_BUS_CASE.replace("0.01 0.1", "0.01 0.0")
    with pytest.raises(NonpositiveReactance):
        build_network(parse_case(text))


def test_scale_loads_case9(case9_net):
    net = scale_loads(case9_net, 1.0)
    total_p, total_q = net.total_load()
    assert total_p == pytest.approx(3.15)
    zero = scale_loads(case9_net, 0.0)
    assert zero.total_load() == (0.0, 0.0)
    a = scale_loads(case9_net, 0.1)
    b = scale_loads(case9_net, 0.2)
    for ba, bb in zip(a.buses, b.buses):
        assert bb.p_d == pytest.approx(2 * ba.p_d)
        assert bb.q_d == pytest.approx(2 * ba.q_d)


def test_scale_loads_composes(case9_net):
    ab = scale_loads(scale_loads(case9_net, 0.5), 0.4)
    direct = scale_loads(case9_net, 0.2)
    for x, y in zip(ab.buses, direct.buses):
        assert x.p_d == pytest.approx(y.p_d)


def test_spanning_tree_radial_chain():
    text = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
    3 1 5 1 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [ 1 0 0 50 -50 1 100 1 100 0; ];
mpc.branch = [
    1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
    2 3 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [ 2 0 0 3 0.1 10 0; ];
"""
    net = build_network(parse_case(text))
    tree = spanning_tree(net)
    assert [(br.index, o) for br, o in tree] == [(0, 1), (1, 1)]
    assert chords(net) == []


def test_spanning_tree_triangle():
    text = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
    3 1 5 1 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [ 1 0 0 50 -50 1 100 1 100 0; ];
mpc.branch = [
    1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
    2 3 0.01 0.1 0 0 0 0 0 0 1 -360 360;
    3 1 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [ 2 0 0 3 0.1 10 0; ];
"""
    net = build_network(parse_case(text))
    tree = spanning_tree(net)
    assert len(tree) == 2
    assert len(chords(net)) == 1


def test_case9_tree_and_chords(case9_net):
    tree = spanning_tree(case9_net)
    assert len(tree) == 8
    assert len(chords(case9_net)) == 1  # |L| - (|N| - 1)


def test_case14_cycle_count(case14_net):
    assert len(chords(case14_net)) == 20 - 14 + 1


def test_disconnected_graph():
    text = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
    2 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
    3 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
    4 1 0 0 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [ 1 0 0 50 -50 1 100 1 100 0; ];
mpc.branch = [
    1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
    3 4 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [ 2 0 0 3 0.1 10 0; ];
"""
    with pytest.raises(DisconnectedGraph):
        build_network(parse_case(text))


def test_tap_folds_into_series_impedance(case14_net):
    # branch 4-7 has ratio 0.978 in the case file
    br = case14_net.branches[7]
    assert br.x == pytest.approx(0.20912 * 0.978)
    assert br.r == 0.0
    # unlimited rating becomes the infinite sentinel, not a big number
    assert math.isinf(br.k_tilde)


def test_generator_cost_rescaled_to_pu(case9_net):
    g = case9_net.generators[0]
    assert g.alpha == pytest.approx(0.11 * 100 * 100)
    assert g.beta == pytest.approx(5 * 100)
    assert g.gamma == pytest.approx(150)
    assert g.p_min == 0.0
    assert g.p_max == pytest.approx(2.5)
