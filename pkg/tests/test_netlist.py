import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agewise.errors import NetlistError
from agewise.netlist import (ActivityProfile, GenSpec, emit_activity, emit_netlist,
                             generate_netlist, parse_activity, parse_netlist, simulate_activity,
                             tc_bounds)
from agewise.netlist.model import combinational_order
from agewise.sta import elaborate, enumerate_paths

from conftest import fixture_path

INV_CHAIN = """\
period 300.0
input a
clkbuf ck drive=x2
ff f0 d=a q=q0 clkpath=ck
ff f1 d=n1 q=q1 clkpath=ck
gate g0 {cell} x1 in={ins} out=n1
route a M1:1
route ck M1:1
route q0 M1:1
route n1 M1:1
route q1 M1:1
"""


def _binomial_ci99(p, n):
    return 2.576 * math.sqrt(p * (1 - p) / n)


def _depth(nl):
    level = {}
    for gid in combinational_order(nl):
        g = nl.gate_by_id[gid]
        level[g.output] = 1 + max((level.get(n, 0) for n in g.inputs), default=0)
    return max(level.values(), default=0)


def test_inv1_fixture(inv1):
    assert len(inv1.gates) == 1
    assert len(inv1.flops) == 2
    assert _depth(inv1) == 1
    assert inv1.period == 200.0


def test_five_gate_counts_match_hand_count(five):
    assert len(five.gates) == 5
    assert len(five.flops) == 2
    assert len(five.clock_buffers) == 3
    assert five.inputs == ("a", "b") and five.outputs == ("y",)
    assert five.ties == (("t0", 0),)
    # a b t0 ck ckl0 ckl1 qa qb n1 n2 n3 n4 y
    assert len(five.routes) == 13
    assert len(five.driver) == 13
    assert five.routes["n1"] == (("M2", 4.0), ("M1", 1.5))
    assert five.fanout["n3"] == 1 and five.fanout["ck"] == 2
    assert _depth(five) == 5


def test_multiple_driver_names_the_net():
    text = open(fixture_path("inv1.nlf")).read() + "gate g9 BUF x1 in=a out=n1\n"
    with pytest.raises(NetlistError, match="n1") as info:
        parse_netlist(text)
    assert info.value.line is not None


@pytest.mark.parametrize("mutation, message", [
    (lambda t: t.replace("in=q0", "in=zz"), "undeclared net 'zz'"),
    (lambda t: t.replace("route n1 M2:4.0\n", ""), "missing route for net 'n1'"),
    (lambda t: t.replace("gate g0 INV", "gate g0 MUX"), "unknown gate type"),
    (lambda t: t.replace("route ck M2:5.0", "route ck M5:5.0"), "M5 is reserved"),
    (lambda t: t.replace("clkbuf ck drive=x4", "clkbuf ck drive=x16"), "x16"),
    (lambda t: t.replace("M2:4.0", "M2:-1"), "positive"),
    (lambda t: t.replace("period 200.0\n", ""), "missing 'period'"),
    (lambda t: t + "bogus stuff\n", "unknown statement"),
])
def test_parse_errors(mutation, message):
    with pytest.raises(NetlistError, match=message):
        parse_netlist(mutation(open(fixture_path("inv1.nlf")).read()))


def test_combinational_cycle_rejected():
    text = open(fixture_path("inv1.nlf")).read().replace("in=q0", "in=n2")
    text += "gate g1 INV x1 in=n1 out=n2\nroute n2 M1:1\n"
    with pytest.raises(NetlistError, match="cycle"):
        parse_netlist(text)


def test_syntax_error_has_column():
    text = open(fixture_path("inv1.nlf")).read().replace("d=a", "dd=a")
    with pytest.raises(NetlistError) as info:
        parse_netlist(text)
    assert (info.value.line, info.value.column) == (5, 7)


@pytest.mark.parametrize("name", ["inv1.nlf", "five_gate.nlf"])
def test_fixture_round_trip(name):
    nl = parse_netlist(open(fixture_path(name)).read())
    assert parse_netlist(emit_netlist(nl)) == nl


@pytest.fixture(scope="module")
def gen_small():
    return generate_netlist(GenSpec(12, 20, 8, seed=3))


def test_generator_deterministic(gen_small):
    again = generate_netlist(GenSpec(12, 20, 8, seed=3))
    assert emit_netlist(again) == emit_netlist(gen_small)
    other = generate_netlist(GenSpec(12, 20, 8, seed=4))
    assert emit_netlist(other) != emit_netlist(gen_small)


def test_generator_round_trip_and_closure(gen_small):
    nl = parse_netlist(emit_netlist(gen_small))
    assert nl == gen_small
    clock = {b.id for b in nl.clock_buffers}
    for net, segs in nl.routes.items():
        if net in clock:
            assert all(layer != "M5" for layer, _ in segs)
    assert all(b.drive != "x16" for b in nl.clock_buffers)


def test_generator_guardband(gen_small, lib):
    graph = elaborate(gen_small, lib)
    worst = max(p.delay for p in enumerate_paths(graph, 1))
    assert abs(gen_small.period - 1.1 * worst) <= 0.5


def test_generator_path_count(lib):
    nl = generate_netlist(GenSpec(num_ffs=50, gates_per_cone=40, depth=12, seed=7))
    paths = enumerate_paths(elaborate(nl, lib), 10)
    assert len({p.id for p in paths}) >= 500


def test_generator_rejects_infeasible():
    with pytest.raises(NetlistError, match="depth"):
        generate_netlist(GenSpec(4, 5, 9))
    with pytest.raises(NetlistError):
        generate_netlist(GenSpec(4, 5, 3, guardband_fraction=0.5))


def test_inverter_duty_cycle_ci():
    nl = parse_netlist(INV_CHAIN.format(cell="INV", ins="q0"))
    act = simulate_activity(nl, 10_000, seed=1)
    assert abs(act.dc["n1"] - 0.5) <= _binomial_ci99(0.5, 10_000)
    # an inverter output is '0' exactly when its input is '1'
    assert act.dc["n1"] == pytest.approx(1.0 - act.dc["q0"], abs=1e-12)
    assert act.tc["n1"] == act.tc["q0"]


def test_nand2_duty_cycle_ci():
    text = INV_CHAIN.format(cell="NAND2", ins="q0,a")
    act = simulate_activity(parse_netlist(text), 10_000, seed=2)
    assert abs(act.dc["n1"] - 0.25) <= _binomial_ci99(0.25, 10_000)


def test_tied_low_buffer_is_constant():
    text = INV_CHAIN.format(cell="BUF", ins="t0") + "tie t0 0\nroute t0 M1:1\n"
    act = simulate_activity(parse_netlist(text), 2_000, seed=0)
    assert act.dc["n1"] == 1.0 and act.tc["n1"] == 0


def test_activity_determinism_and_format(five):
    a = simulate_activity(five, 500, seed=9)
    b = simulate_activity(five, 500, seed=9)
    assert a == b
    back = parse_activity(emit_activity(a))
    assert back == a


def test_activity_tc_parity(five):
    # a net that starts and ends at the same value toggles an even number of times
    act = simulate_activity(five, 1_000, seed=5)
    rng = np.random.default_rng(5)
    first_a = rng.random(1_000) < 0.5
    assert act.tc["a"] % 2 == int(first_a[0] != first_a[-1])


def test_tc_bounds_simple():
    prof = ActivityProfile(20, {"a": 0.5, "b": 0.5, "c": 0.5}, {"a": 3, "b": 17, "c": 9})
    assert tc_bounds(prof) == (3, 17)
    const = ActivityProfile(10, {"x": 1.0, "y": 0.0}, {"x": 0, "y": 0})
    assert tc_bounds(const) == (0, 0)
    with pytest.raises(ValueError):
        tc_bounds(ActivityProfile(10, {}, {}))


def test_tc_bounds_on_generated_design():
    nl = generate_netlist(GenSpec(50, 20, 8, seed=2))
    act = simulate_activity(nl, 10_000, seed=3)
    vals = sorted(act.tc.values())
    assert tc_bounds(act) == (vals[0], vals[-1])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**31))
def test_activity_ranges(cycles, seed):
    nl = parse_netlist(INV_CHAIN.format(cell="XOR2", ins="q0,a"))
    act = simulate_activity(nl, cycles, seed=seed)
    for net in nl.data_nets:  # clock nets carry a fixed 50% duty cycle
        assert 0.0 <= act.dc[net] <= 1.0
        assert 0 <= act.tc[net] <= cycles
        assert act.dc[net] * cycles == pytest.approx(round(act.dc[net] * cycles), abs=1e-9)
