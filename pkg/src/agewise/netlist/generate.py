"""Seeded synthetic sequential netlists.

Every flip-flop captures the output of its own layered logic cone.  Cones
come in flavours that differ only in how gate inputs are wired, not in the
mix of cell types, drives or routing:

``cold``
    reducing gates are AND2s of two in-cone nets, so cone signals settle
    near logic '0' (little bias-temperature stress);
``hot``
    reducing gates are OR2s of two in-cone nets, so signals settle near '1'
    (pull-up permanently stressed);
``mixed``
    any cell type on random in-cone inputs (ordinary random logic).

Non-reducing cells take their side input from a tie cell that keeps the
signal's polarity.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..errors import NetlistError
from .model import ClockBuffer, FlipFlop, Gate, Netlist

_DRIVES = ("x0", "x1", "x2", "x4", "x8", "x16")
_DRIVE_W = (0.15, 0.35, 0.25, 0.15, 0.07, 0.03)
_LAYER_LEN = {"M1": (2.0, 8.0), "M2": (3.0, 12.0), "M3": (5.0, 18.0),
              "M4": (8.0, 24.0), "M5": (10.0, 40.0)}
_DATA_LAYERS = ("M1", "M2", "M3", "M4", "M5")
_DATA_LAYER_W = (0.3, 0.3, 0.2, 0.14, 0.06)
_CLK_LAYERS = ("M1", "M2", "M3", "M4")
_CLK_LAYER_W = (0.2, 0.3, 0.3, 0.2)
# non-reducing cone cells, drawn identically for every flavour
_BODY = ("AND2", "OR2", "XOR2", "BUF")
_BODY_W = (0.4, 0.4, 0.1, 0.1)


@dataclass(frozen=True)
class GenSpec:
    num_ffs: int
    gates_per_cone: int
    depth: int
    seed: int = 0
    guardband_fraction: float = 0.1
    flavours: tuple = (("hot", 0.5), ("cold", 0.5))
    ffs_per_clock_group: int = 8
    min_cone_paths: int = 10  # cones with fewer launch-to-capture paths are redrawn


def _check(spec):
    if min(spec.num_ffs, spec.gates_per_cone, spec.depth) < 1:
        raise NetlistError("num_ffs, gates_per_cone and depth must all be >= 1")
    if spec.depth > spec.gates_per_cone:
        raise NetlistError(
            f"infeasible spec: depth {spec.depth} exceeds gates_per_cone {spec.gates_per_cone}")
    if not 0.0 <= spec.guardband_fraction <= 0.2:
        raise NetlistError("guardband_fraction must lie in [0, 0.2]")
    names = [f for f, _ in spec.flavours]
    if any(f not in ("hot", "cold", "mixed") for f in names):
        raise NetlistError(f"unknown cone flavour in {names}")


def _route(rng, layers, weights):
    nseg = 1 + int(rng.random() < 0.4)
    segs = []
    for _ in range(nseg):
        layer = layers[rng.choice(len(layers), p=weights)]
        lo, hi = _LAYER_LEN[layer]
        segs.append((layer, round(float(rng.uniform(lo, hi)), 1)))
    return tuple(segs)


def _drive(rng):
    return _DRIVES[rng.choice(len(_DRIVES), p=_DRIVE_W)]


def _level_widths(gates, depth):
    if depth == 1:
        return [1]
    body = gates - 1
    base, extra = divmod(body, depth - 1)
    return [base + (1 if i < extra else 0) for i in range(depth - 1)] + [1]


def _cone(rng, idx, flavour, widths, sources, gates):
    """Append the gates of one cone; return its output net."""
    levels = []
    for lvl, width in enumerate(widths):
        nets = []
        for j in range(width):
            gid = f"g{idx}_{lvl}_{j}"
            out = f"d{idx}" if lvl == len(widths) - 1 else f"n{idx}_{lvl}_{j}"
            if lvl == 0:
                a, b = (sources[int(i)] for i in rng.choice(len(sources), 2, replace=False))
                if flavour == "cold":
                    gtype = ("AND2", "NOR2")[int(rng.integers(2))]
                elif flavour == "hot":
                    gtype = ("OR2", "NAND2")[int(rng.integers(2))]
                else:
                    gtype = ("AND2", "OR2", "NAND2", "NOR2", "XOR2")[int(rng.integers(5))]
                ins = (a, b)
            else:
                prev = levels[-1]
                pool = prev + (levels[-2] if lvl >= 2 else [])
                a = prev[j % len(prev)] if width >= len(prev) else prev[int(rng.integers(len(prev)))]
                b = pool[int(rng.integers(len(pool)))]
                if b == a and len(pool) > 1:
                    b = pool[(pool.index(a) + 1) % len(pool)]
                if flavour == "mixed":
                    gtype = ("INV", "BUF", "NAND2", "NOR2", "AND2", "OR2", "XOR2")[int(rng.integers(7))]
                    ins = (a,) if gtype in ("INV", "BUF") else (a, b)
                else:
                    gtype = _BODY[rng.choice(len(_BODY), p=_BODY_W)]
                    if gtype == "BUF":
                        ins = (a,)
                    elif gtype == "XOR2":
                        ins = (a, "tie0")
                    elif (gtype == "AND2") == (flavour == "cold"):
                        ins = (a, b)  # reducing: pushes the signal further to its rail
                    else:
                        ins = (a, "tie1" if gtype == "AND2" else "tie0")
            gates.append(Gate(gid, gtype, _drive(rng), ins, out))
            nets.append(out)
        levels.append(nets)
    return levels[-1][0]


_CONE_ATTEMPTS = 50


def _cone_paths(cone, out):
    """Number of distinct flip-flop-to-output pin paths through a cone."""
    count = {}
    for g in cone:  # cone gates are built in topological order
        count[g.output] = sum(count.get(n, 0 if n.startswith("tie") else 1) for n in g.inputs)
    return count[out]


def generate_netlist(spec):
    """Build a netlist for ``spec``; the clock period is set from STA."""
    from ..sta import elaborate, k_longest_paths
    from .library import CellLibrary

    _check(spec)
    rng = np.random.default_rng(spec.seed)
    n = spec.num_ffs
    qnets = [f"q{i}" for i in range(n)]

    bufs = [ClockBuffer("ck", "x8")]
    groups = (n + spec.ffs_per_clock_group - 1) // spec.ffs_per_clock_group
    bufs += [ClockBuffer(f"ckg{j}", "x4") for j in range(groups)]
    bufs += [ClockBuffer(f"ckl{i}", ("x1", "x2")[int(rng.integers(2))]) for i in range(n)]
    flops = [
        FlipFlop(f"f{i}", f"d{i}", qnets[i], ("ck", f"ckg{i // spec.ffs_per_clock_group}", f"ckl{i}"))
        for i in range(n)
    ]

    names = [f for f, _ in spec.flavours]
    weights = np.array([w for _, w in spec.flavours], dtype=float)
    counts = np.floor(weights / weights.sum() * n).astype(int)
    counts[: n - counts.sum()] += 1
    flavour_of = rng.permutation(np.repeat(np.arange(len(names)), counts))

    widths = _level_widths(spec.gates_per_cone, spec.depth)
    gates = []
    for i in range(n):
        best = None
        for _ in range(_CONE_ATTEMPTS):
            cone = []
            out = _cone(rng, i, names[flavour_of[i]], widths, qnets, cone)
            count = _cone_paths(cone, out)
            if best is None or count > best[0]:
                best = (count, cone)
            if count >= spec.min_cone_paths:
                break
        gates += best[1]

    routes = {}
    for b in bufs:
        routes[b.id] = _route(rng, _CLK_LAYERS, _CLK_LAYER_W)
    for net in ("tie0", "tie1"):
        routes[net] = (("M1", 1.0),)
    for q in qnets:
        routes[q] = _route(rng, _DATA_LAYERS, _DATA_LAYER_W)
    for g in gates:
        routes[g.output] = _route(rng, _DATA_LAYERS, _DATA_LAYER_W)

    nl = Netlist(
        period=1.0,
        inputs=(),
        outputs=(),
        ties=(("tie0", 0), ("tie1", 1)),
        clock_buffers=tuple(bufs),
        flops=tuple(flops),
        gates=tuple(gates),
        routes=routes,
    )
    graph = elaborate(nl, CellLibrary())
    worst = max(k_longest_paths(graph, ff.id, 1)[0].delay for ff in flops)
    return dataclasses.replace(nl, period=worst * (1.0 + spec.guardband_fraction))


def cone_flavours(netlist):
    """Recover each endpoint's cone flavour from its reducing cells (for diagnostics)."""
    out = {}
    for ff in netlist.flops:
        idx = ff.d[1:]
        types = [g.type for g in netlist.gates if g.id.startswith(f"g{idx}_0_")]
        if types and all(t in ("AND2", "NOR2") for t in types):
            out[ff.id] = "cold"
        elif types and all(t in ("OR2", "NAND2") for t in types):
            out[ff.id] = "hot"
        else:
            out[ff.id] = "mixed"
    return out
