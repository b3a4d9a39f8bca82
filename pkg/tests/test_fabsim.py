import dataclasses

import numpy as np
import pytest

from agewise.aging import AgingConditions, oracle_delta_delay, oracle_delta_vth
from agewise.errors import AgingError, FabError, FormatError
from agewise.fabsim import (ChipInstance, FabConfig, FabModel, age_chip, emit_chip, fabricate,
                            parse_chip, sample_fab_model, truncated_normal)
from agewise.netlist import ActivityProfile, simulate_activity
from agewise.sta import elaborate, enumerate_paths, k_longest_paths

ZERO = FabConfig(sigma_r=0.0, sigma_s=0.0)


def test_identity_model_reproduces_sta(five_graph):
    chip = fabricate(five_graph, FabModel.identity(), chip_seed=4)
    assert chip.delays == {a.id: a.delay for a in five_graph.arcs}
    for p in enumerate_paths(five_graph, 10):
        assert chip.path_delay(p) == pytest.approx(p.delay, abs=1e-9)


def test_collapsed_drift_is_identity():
    fab = sample_fab_model(FabConfig(0.0, 0.0, (1.0, 1.0), (1.0, 1.0)), 3)
    ident = FabModel.identity()
    assert fab.drift_gate == ident.drift_gate and fab.drift_layer == ident.drift_layer


def test_snapshot_determinism():
    assert sample_fab_model(FabConfig(), 11) == sample_fab_model(FabConfig(), 11)
    assert sample_fab_model(FabConfig(), 11) != sample_fab_model(FabConfig(), 12)


def test_drift_ranges_over_many_snapshots():
    gate = [sample_fab_model(FabConfig(), s).drift_gate[("NAND2", "x1")] for s in range(1000)]
    layer = [sample_fab_model(FabConfig(), s).drift_layer["M3"] for s in range(1000)]
    assert 0.90 <= min(gate) and max(gate) <= 1.00
    assert 0.90 <= min(layer) and max(layer) <= 1.05
    # the whole range is actually used
    assert min(gate) < 0.91 and max(gate) > 0.99


def test_fab_config_validation():
    with pytest.raises(FabError):
        FabConfig(sigma_r=-0.1)
    with pytest.raises(FabError):
        FabConfig(drift_gate=(1.0, 0.9))


def test_zero_variation_chips_identical(five_graph):
    fab = sample_fab_model(ZERO, 5)
    a = fabricate(five_graph, fab, 1)
    b = fabricate(five_graph, fab, 2)
    assert a.delays == b.delays
    # drift is shared: arc ratios between chips are exactly one
    assert {a.delays[k] / b.delays[k] for k in a.delays} == {1.0}


def test_chip_determinism(five_graph):
    fab = sample_fab_model(FabConfig(), 5)
    assert fabricate(five_graph, fab, 9).delays == fabricate(five_graph, fab, 9).delays
    assert fabricate(five_graph, fab, 9).delays != fabricate(five_graph, fab, 10).delays


def test_random_variation_std(five_graph):
    fab = sample_fab_model(FabConfig(sigma_r=0.03, sigma_s=0.0), 5)
    arc = five_graph.arc["c:g3:0"]
    nominal = arc.delay * fab.drift_gate[("XOR2", "x1")]
    vals = np.array([fabricate(five_graph, fab, s).delays[arc.id] for s in range(500)])
    assert vals.std(ddof=1) == pytest.approx(0.03 * nominal, rel=0.2)
    assert vals.mean() == pytest.approx(nominal, rel=0.01)


def test_truncation():
    z = truncated_normal(np.random.default_rng(0), 0.1, 100_000, cut=2.0)
    assert z.min() >= 0.8 and z.max() <= 1.2
    assert len(z) == 100_000


def test_wire_ratio_depends_only_on_layer(five_graph):
    fab = sample_fab_model(FabConfig(), 2)
    chip = fabricate(five_graph, fab, 3)
    ratios = {}
    for a in five_graph.arcs:
        if a.kind == "wire":
            ratios.setdefault(a.layer, set()).add(round(chip.delays[a.id] / a.delay, 12))
    assert all(len(v) == 1 for v in ratios.values())


def _constant_activity(nl, dc, tc, cycles):
    nets = set(nl.driver)
    return ActivityProfile(cycles, dict.fromkeys(nets, dc), dict.fromkeys(nets, tc))


def test_age_zero_months_unchanged(five_graph):
    chip = fabricate(five_graph, FabModel.identity(), 1)
    act = simulate_activity(five_graph.netlist, 200, seed=1)
    assert age_chip(chip, five_graph, act, AgingConditions(0.0)) is chip


def test_single_gate_oracle_increment(inv1, lib):
    g = elaborate(inv1, lib)
    chip = fabricate(g, FabModel.identity(), 1)
    act = _constant_activity(inv1, 0.3, 400, 1000)
    cond = AgingConditions(6.0)
    aged = age_chip(chip, g, act, cond)
    inc = aged.delays["c:g0:0"] - chip.delays["c:g0:0"]
    assert inc == pytest.approx(oracle_delta_delay("INV", "x1", 0.3, 400, 1000, cond, lib))
    # wires never age
    assert aged.delays["w:n1:0"] == chip.delays["w:n1:0"]
    assert aged.age_months == 6.0 and aged.stress["g0"] == (0.3, 400)


def test_aged_path_is_fab_plus_oracle_sum(five_graph, lib):
    fab = sample_fab_model(FabConfig(), 8)
    chip = fabricate(five_graph, fab, 8)
    act = simulate_activity(five_graph.netlist, 500, seed=8)
    cond = AgingConditions(12.0)
    aged = age_chip(chip, five_graph, act, cond)
    sens = 1.0 / (cond.vdd - lib.vth0)
    p = next(p for p in enumerate_paths(five_graph, 10) if p.launch == "fa")

    def inc(arc_id):
        a = five_graph.arc[arc_id]
        if a.kind == "wire":
            return 0.0
        net = a.net if a.kind != "ctq" else five_graph.netlist.flop_by_id[a.instance].q
        gtype = "BUF"
        if a.instance in five_graph.netlist.gate_by_id:
            gtype = five_graph.netlist.gate_by_id[a.instance].type
        dv = oracle_delta_vth(gtype, act.dc[net], act.tc[net] / act.cycles, cond)
        return chip.delays[arc_id] * dv * sens

    expected = chip.path_delay(p) + sum(map(inc, p.lp)) + sum(map(inc, p.dp)) \
        - sum(map(inc, p.cp))
    assert aged.path_delay(p) == pytest.approx(expected, rel=1e-12)


def test_aging_is_additive_on_cells(five_graph):
    chip = fabricate(five_graph, sample_fab_model(FabConfig(), 1), 1)
    aged = age_chip(chip, five_graph, simulate_activity(five_graph.netlist, 300, seed=2),
                    AgingConditions(3.0))
    assert all(aged.delays[k] >= v for k, v in chip.delays.items())


def test_aging_no_capture_asymmetry_on_inv1(inv1, lib):
    g = elaborate(inv1, lib)
    chip = fabricate(g, sample_fab_model(FabConfig(), 1), 1)
    aged = age_chip(chip, g, simulate_activity(inv1, 300, seed=2), AgingConditions(3.0))
    (p,) = k_longest_paths(g, "f1", 1)
    assert aged.path_delay(p) >= chip.path_delay(p)


def test_age_errors(five_graph):
    chip = fabricate(five_graph, FabModel.identity(), 1)
    act = simulate_activity(five_graph.netlist, 100, seed=1)
    aged = age_chip(chip, five_graph, act, AgingConditions(2.0))
    with pytest.raises(AgingError, match="already aged"):
        age_chip(aged, five_graph, act, AgingConditions(2.0))
    partial = ActivityProfile(100, {"a": 0.5}, {"a": 3})
    with pytest.raises(AgingError, match="no activity"):
        age_chip(chip, five_graph, partial, AgingConditions(2.0))
    with pytest.raises(AgingError):
        age_chip(chip, five_graph, None, AgingConditions(2.0))


def test_bad_fab_factor_rejected(five_graph):
    fab = dataclasses.replace(FabModel.identity(),
                              drift_layer={**FabModel.identity().drift_layer, "M1": -1.0})
    with pytest.raises(FabError, match="non-positive"):
        fabricate(five_graph, fab, 1)


def test_chip_round_trip(five_graph):
    chip = fabricate(five_graph, sample_fab_model(FabConfig(), 3), 17, "chipA")
    assert parse_chip(emit_chip(chip)) == chip
    act = simulate_activity(five_graph.netlist, 100, seed=1)
    aged = age_chip(chip, five_graph, act, AgingConditions(5.5), activity_seed=77)
    back = parse_chip(emit_chip(aged))
    assert back == aged
    assert isinstance(back, ChipInstance) and back.activity_seed == 77


def test_chip_parse_errors():
    with pytest.raises(FormatError):
        parse_chip("chip x\nage 0.0\narc a:b notanumber\n")
