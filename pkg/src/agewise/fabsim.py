"""Fabricated chip instances: process drift, systematic and random variation, aging.

Cell arcs scale as ``drift(type, drive) * sys(type) * rnd(instance)`` and
wire arcs as ``drift(layer) * sys(layer)``.  Drift is drawn once per process
snapshot; systematic factors once per chip; random factors once per
instance.  Clock buffers count as BUF cells and a flip-flop's clock-to-q
arc as a BUF x1 cell.
"""

from dataclasses import dataclass, field

import numpy as np

from .aging import AgingConditions, OracleParams, delay_sensitivity, instance_cells, \
    oracle_delta_vth
from .errors import AgingError, FabError, FormatError
from .netlist.library import DRIVES, GATE_TYPES, LAYERS


@dataclass(frozen=True)
class FabConfig:
    sigma_r: float = 0.03
    sigma_s: float = 0.02
    drift_gate: tuple = (0.90, 1.00)
    drift_layer: tuple = (0.90, 1.05)
    truncation: float = 3.0

    def __post_init__(self):
        if self.sigma_r < 0 or self.sigma_s < 0:
            raise FabError("variation sigmas must be >= 0")
        for lo, hi in (self.drift_gate, self.drift_layer):
            if not 0 < lo <= hi:
                raise FabError(f"bad drift range ({lo}, {hi})")
        if self.truncation <= 0:
            raise FabError("truncation must be positive")


@dataclass(frozen=True)
class FabModel:
    drift_gate: dict  # (type, drive) -> factor
    drift_layer: dict  # layer -> factor
    sigma_r: float
    sigma_s: float
    truncation: float
    snapshot_seed: int

    @classmethod
    def identity(cls):
        return cls({(g, d): 1.0 for g in GATE_TYPES for d in DRIVES},
                   dict.fromkeys(LAYERS, 1.0), 0.0, 0.0, 3.0, 0)


def sample_fab_model(cfg: FabConfig = FabConfig(), snapshot_seed=0):
    rng = np.random.default_rng([0xFAB, snapshot_seed])
    lo, hi = cfg.drift_gate
    gate = {(g, d): float(rng.uniform(lo, hi)) for g in GATE_TYPES for d in DRIVES}
    lo, hi = cfg.drift_layer
    layer = {m: float(rng.uniform(lo, hi)) for m in LAYERS}
    return FabModel(gate, layer, cfg.sigma_r, cfg.sigma_s, cfg.truncation, snapshot_seed)


def truncated_normal(rng, sigma, size, cut=3.0):
    """``N(1, sigma)`` restricted to ``[1 - cut*sigma, 1 + cut*sigma]`` by rejection."""
    z = rng.standard_normal(size)
    bad = np.abs(z) > cut
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > cut
    return 1.0 + sigma * z


@dataclass(frozen=True)
class ChipInstance:
    chip_id: str
    age_months: float
    delays: dict  # arc id -> ps
    fab_seed: int
    chip_seed: int
    activity_seed: int | None = None
    cycles: int | None = None
    stress: dict = field(default_factory=dict)  # instance -> (dc, tc)

    def path_delay(self, path):
        d = self.delays
        return (sum(d[a] for a in path.lp) + sum(d[a] for a in path.dp) + path.setup
                - sum(d[a] for a in path.cp))


def _cell_key(graph, arc):
    nl = graph.netlist
    if arc.kind == "ctq":
        return "BUF", "x1"
    if arc.instance in nl.clkbuf_by_id:
        return "BUF", nl.clkbuf_by_id[arc.instance].drive
    g = nl.gate_by_id[arc.instance]
    return g.type, g.drive


def fabricate(graph, fab: FabModel, chip_seed, chip_id=None):
    """A fresh (age 0) chip: every STA arc delay scaled by its fabrication factors."""
    nl = graph.netlist
    rng = np.random.default_rng([fab.snapshot_seed, chip_seed])
    sys_gate = dict(zip(GATE_TYPES, truncated_normal(rng, fab.sigma_s, len(GATE_TYPES),
                                                     fab.truncation)))
    sys_layer = dict(zip(LAYERS, truncated_normal(rng, fab.sigma_s, len(LAYERS),
                                                  fab.truncation)))
    insts = [g.id for g in nl.gates] + [b.id for b in nl.clock_buffers] \
        + [f.id for f in nl.flops]
    rnd = dict(zip(insts, truncated_normal(rng, fab.sigma_r, len(insts), fab.truncation)))
    delays = {}
    for a in graph.arcs:
        if a.kind == "wire":
            f = fab.drift_layer[a.layer] * sys_layer[a.layer]
        else:
            key = _cell_key(graph, a)
            f = fab.drift_gate[key] * sys_gate[key[0]] * rnd[a.instance]
        d = a.delay * float(f)
        if not d > 0:
            raise FabError(f"non-positive fabricated delay on arc {a.id}")
        delays[a.id] = d
    return ChipInstance(chip_id or f"chip{chip_seed}", 0.0, delays, fab.snapshot_seed,
                        chip_seed)


def age_chip(chip: ChipInstance, graph, activity, cond=AgingConditions(),
             params=OracleParams(), activity_seed=None):
    """Add the oracle's aging increase to every cell arc of a fresh chip.

    The increase of an arc is its fabricated delay times the relative shift
    ``dVth / (vdd - vth0)`` for the instance's output-net activity.
    """
    if chip.age_months != 0:
        raise AgingError(f"chip {chip.chip_id} is already aged")
    if activity is None:
        raise AgingError("aging needs an activity profile")
    if cond.months == 0:
        return chip
    cells = instance_cells(graph.netlist)
    sens = delay_sensitivity(cond, graph.lib)
    rel, stress = {}, {}
    for inst, (gtype, _, net) in cells.items():
        if net not in activity.dc:
            raise AgingError(f"no activity for net '{net}'")
        dc, tc = activity.dc[net], activity.tc[net]
        rel[inst] = oracle_delta_vth(gtype, dc, tc / activity.cycles, cond, params) * sens
        stress[inst] = (dc, tc)
    delays = dict(chip.delays)
    for a in graph.arcs:
        if a.kind != "wire":
            delays[a.id] = chip.delays[a.id] * (1.0 + rel[a.instance])
    return ChipInstance(chip.chip_id, float(cond.months), delays, chip.fab_seed,
                        chip.chip_seed, activity_seed, activity.cycles, stress)


def emit_chip(chip: ChipInstance):
    lines = [f"chip {chip.chip_id}", f"age {chip.age_months!r}",
             f"seeds fab={chip.fab_seed} chip={chip.chip_seed} "
             f"activity={'-' if chip.activity_seed is None else chip.activity_seed}",
             f"cycles {'-' if chip.cycles is None else chip.cycles}"]
    for inst, (dc, tc) in chip.stress.items():
        lines.append(f"stress {inst} dc={dc!r} tc={tc}")
    for a, d in chip.delays.items():
        lines.append(f"arc {a} {d!r}")
    return "\n".join(lines) + "\n"


def _opt_int(text):
    return None if text == "-" else int(text)


def parse_chip(text):
    head, delays, stress = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        try:
            kw = toks[0]
            if kw == "arc" and len(toks) == 3:
                delays[toks[1]] = float(toks[2])
            elif kw == "stress" and len(toks) == 4:
                stress[toks[1]] = (float(toks[2].removeprefix("dc=")),
                                   int(toks[3].removeprefix("tc=")))
            elif kw in ("chip", "age", "cycles") and len(toks) == 2:
                head[kw] = toks[1]
            elif kw == "seeds" and len(toks) == 4:
                for t in toks[1:]:
                    k, sep, v = t.partition("=")
                    if not sep:
                        raise ValueError(f"bad seed field '{t}'")
                    head["seed_" + k] = v
            else:
                raise ValueError(f"unexpected statement '{kw}'")
        except ValueError as exc:
            raise FormatError(f"chip line {lineno}: {exc}") from None
    for k in ("chip", "age", "cycles", "seed_fab", "seed_chip", "seed_activity"):
        if k not in head:
            raise FormatError(f"chip header missing '{k.removeprefix('seed_')}'")
    try:
        return ChipInstance(head["chip"], float(head["age"]), delays, int(head["seed_fab"]),
                            int(head["seed_chip"]), _opt_int(head["seed_activity"]),
                            _opt_int(head["cycles"]), stress)
    except ValueError as exc:
        raise FormatError(f"chip header: {exc}") from None


def read_chip(path):
    with open(path, encoding="utf-8") as fh:
        return parse_chip(fh.read())


def write_chip(chip, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_chip(chip))
