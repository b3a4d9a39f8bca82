"""Netlist value types and the line-oriented ``.nlf`` text format.

Grammar, one statement per line, ``#`` starts a comment::

    period <ps>
    input <net> | output <net>
    tie <net> <0|1>
    clkbuf <id> drive=<xK>
    ff <id> d=<net> q=<net> clkpath=<buf_id,...>
    gate <id> <TYPE> <xK> in=<net,...> out=<net>
    route <net> <layer>:<len_um>[,<layer>:<len_um>...]

A clock buffer drives a net named after its own id.  The clock root is
implicit and feeds the first buffer of every ``clkpath``.
"""

import graphlib
from dataclasses import dataclass
from functools import cached_property

from ..errors import NetlistError
from .library import ARITY, DRIVES, GATE_TYPES, LAYERS


@dataclass(frozen=True)
class Gate:
    id: str
    type: str
    drive: str
    inputs: tuple
    output: str


@dataclass(frozen=True)
class FlipFlop:
    id: str
    d: str
    q: str
    clkpath: tuple


@dataclass(frozen=True)
class ClockBuffer:
    id: str
    drive: str


@dataclass(frozen=True)
class Netlist:
    period: float
    inputs: tuple
    outputs: tuple
    ties: tuple  # (net, value)
    clock_buffers: tuple
    flops: tuple
    gates: tuple
    routes: dict  # net -> tuple of (layer, length_um)

    @cached_property
    def gate_by_id(self):
        return {g.id: g for g in self.gates}

    @cached_property
    def flop_by_id(self):
        return {f.id: f for f in self.flops}

    @cached_property
    def clkbuf_by_id(self):
        return {b.id: b for b in self.clock_buffers}

    @cached_property
    def driver(self):
        """net -> (kind, id) with kind in {input, tie, ff, gate, clkbuf}."""
        drv = {}
        for n in self.inputs:
            drv[n] = ("input", n)
        for n, _ in self.ties:
            drv[n] = ("tie", n)
        for f in self.flops:
            drv[f.q] = ("ff", f.id)
        for g in self.gates:
            drv[g.output] = ("gate", g.id)
        for b in self.clock_buffers:
            drv[b.id] = ("clkbuf", b.id)
        return drv

    @cached_property
    def fanout(self):
        """net -> number of gate/flip-flop pins it drives."""
        fo = dict.fromkeys(self.driver, 0)
        for g in self.gates:
            for n in g.inputs:
                fo[n] += 1
        for f in self.flops:
            fo[f.d] += 1
        for parent in self.clock_parent.values():
            if parent is not None:
                fo[parent] += 1
        for f in self.flops:
            fo[f.clkpath[-1]] += 1
        return fo

    @cached_property
    def clock_parent(self):
        """clock buffer id -> upstream buffer id (``None`` for the root)."""
        parent = {}
        for f in self.flops:
            prev = None
            for b in f.clkpath:
                parent.setdefault(b, prev)
                prev = b
        return parent

    @cached_property
    def topo_gates(self):
        """Gates in a deterministic topological order."""
        order = combinational_order(self)
        return tuple(self.gate_by_id[g] for g in order)

    @property
    def data_nets(self):
        return [n for n, (kind, _) in self.driver.items() if kind != "clkbuf"]


def combinational_order(nl):
    by_out = {g.output: g.id for g in nl.gates}
    ts = graphlib.TopologicalSorter()
    for g in nl.gates:
        ts.add(g.id, *[by_out[n] for n in g.inputs if n in by_out])
    try:
        ts.prepare()
    except graphlib.CycleError as exc:
        cyc = exc.args[1]
        raise NetlistError("combinational cycle through gates " + " -> ".join(cyc)) from None
    order = []
    while ts.is_active():
        ready = sorted(ts.get_ready())
        order.extend(ready)
        ts.done(*ready)
    return order


def _fmt(x):
    return repr(float(x))


def emit_netlist(nl):
    lines = [f"period {_fmt(nl.period)}"]
    lines += [f"input {n}" for n in nl.inputs]
    lines += [f"output {n}" for n in nl.outputs]
    lines += [f"tie {n} {v}" for n, v in nl.ties]
    lines += [f"clkbuf {b.id} drive={b.drive}" for b in nl.clock_buffers]
    lines += [f"ff {f.id} d={f.d} q={f.q} clkpath={','.join(f.clkpath)}" for f in nl.flops]
    lines += [
        f"gate {g.id} {g.type} {g.drive} in={','.join(g.inputs)} out={g.output}" for g in nl.gates
    ]
    for net, segs in nl.routes.items():
        body = ",".join(f"{layer}:{_fmt(length)}" for layer, length in segs)
        lines.append(f"route {net} {body}")
    return "\n".join(lines) + "\n"


class _Tok:
    __slots__ = ("text", "col")

    def __init__(self, text, col):
        self.text = text
        self.col = col


def _tokens(line):
    out, i, n = [], 0, len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not line[j].isspace():
            j += 1
        out.append(_Tok(line[i:j], i + 1))
        i = j
    return out


def _kv(tok, key, lineno):
    prefix = key + "="
    if not tok.text.startswith(prefix):
        raise NetlistError(f"expected '{prefix}...', got '{tok.text}'", lineno, tok.col)
    return tok.text[len(prefix):]


def _number(text, lineno, col, what):
    try:
        val = float(text)
    except ValueError:
        raise NetlistError(f"bad {what} '{text}'", lineno, col) from None
    if not val > 0 or val != val or val == float("inf"):
        raise NetlistError(f"{what} must be positive and finite, got '{text}'", lineno, col)
    return val


def _names(text, lineno, col):
    names = text.split(",") if text else []
    if not names or any(not n for n in names):
        raise NetlistError(f"empty name in list '{text}'", lineno, col)
    return tuple(names)


_ARGC = {"period": 1, "input": 1, "output": 1, "tie": 2, "clkbuf": 2, "ff": 4, "gate": 5}


def parse_netlist(text):
    """Parse ``.nlf`` source into a validated :class:`Netlist`."""
    period = None
    inputs, outputs, ties, bufs, flops, gates = [], [], [], [], [], []
    routes, where = {}, {}
    drivers = {}
    ids = {}

    def add_driver(net, lineno, col):
        if net in drivers:
            raise NetlistError(
                f"net '{net}' has multiple drivers (first driven on line {drivers[net]})",
                lineno, col)
        drivers[net] = lineno

    def add_id(ident, lineno, col):
        if ident in ids:
            raise NetlistError(f"duplicate id '{ident}' (first on line {ids[ident]})", lineno, col)
        ids[ident] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        kw = toks[0].text
        args = toks[1:]
        if kw == "route":
            if len(args) != 2:
                raise NetlistError("route takes a net and a segment list", lineno, toks[0].col)
            net = args[0].text
            if net in routes:
                raise NetlistError(f"duplicate route for net '{net}'", lineno, args[0].col)
            segs = []
            for part in args[1].text.split(","):
                layer, sep, length = part.partition(":")
                if not sep:
                    raise NetlistError(f"bad segment '{part}'", lineno, args[1].col)
                if layer not in LAYERS:
                    raise NetlistError(f"unknown layer '{layer}'", lineno, args[1].col)
                segs.append((layer, _number(length, lineno, args[1].col, "wire length")))
            routes[net] = tuple(segs)
            where[net] = (lineno, args[0].col)
            continue
        if kw not in _ARGC:
            raise NetlistError(f"unknown statement '{kw}'", lineno, toks[0].col)
        if len(args) != _ARGC[kw]:
            raise NetlistError(f"'{kw}' takes {_ARGC[kw]} argument(s), got {len(args)}",
                               lineno, toks[0].col)
        if kw == "period":
            if period is not None:
                raise NetlistError("period declared twice", lineno, toks[0].col)
            period = _number(args[0].text, lineno, args[0].col, "period")
        elif kw == "input":
            add_driver(args[0].text, lineno, args[0].col)
            inputs.append(args[0].text)
        elif kw == "output":
            outputs.append((args[0].text, lineno, args[0].col))
        elif kw == "tie":
            if args[1].text not in ("0", "1"):
                raise NetlistError("tie value must be 0 or 1", lineno, args[1].col)
            add_driver(args[0].text, lineno, args[0].col)
            ties.append((args[0].text, int(args[1].text)))
        elif kw == "clkbuf":
            ident = args[0].text
            drive = _kv(args[1], "drive", lineno)
            if drive not in DRIVES:
                raise NetlistError(f"unknown drive '{drive}'", lineno, args[1].col)
            if drive == "x16":
                raise NetlistError("x16 drive is reserved for data-path cells", lineno, args[1].col)
            add_id(ident, lineno, args[0].col)
            add_driver(ident, lineno, args[0].col)
            bufs.append((ClockBuffer(ident, drive), lineno))
        elif kw == "ff":
            ident = args[0].text
            d = _kv(args[1], "d", lineno)
            q = _kv(args[2], "q", lineno)
            clk = _names(_kv(args[3], "clkpath", lineno), lineno, args[3].col)
            add_id(ident, lineno, args[0].col)
            add_driver(q, lineno, args[2].col)
            flops.append((FlipFlop(ident, d, q, clk), lineno))
        elif kw == "gate":
            ident, gtype, drive = args[0].text, args[1].text, args[2].text
            if gtype not in GATE_TYPES:
                raise NetlistError(f"unknown gate type '{gtype}'", lineno, args[1].col)
            if drive not in DRIVES:
                raise NetlistError(f"unknown drive '{drive}'", lineno, args[2].col)
            ins = _names(_kv(args[3], "in", lineno), lineno, args[3].col)
            if len(ins) != ARITY[gtype]:
                raise NetlistError(f"{gtype} needs {ARITY[gtype]} input(s), got {len(ins)}",
                                   lineno, args[3].col)
            out = _kv(args[4], "out", lineno)
            add_id(ident, lineno, args[0].col)
            add_driver(out, lineno, args[4].col)
            gates.append((Gate(ident, gtype, drive, ins, out), lineno))

    if period is None:
        raise NetlistError("missing 'period' statement")

    buf_ids = {b.id for b, _ in bufs}
    for g, lineno in gates:
        for n in g.inputs:
            if n not in drivers:
                raise NetlistError(f"undeclared net '{n}' used by gate '{g.id}'", lineno)
            if n in buf_ids:
                raise NetlistError(f"clock net '{n}' used as data by gate '{g.id}'", lineno)
    for f, lineno in flops:
        if f.d not in drivers:
            raise NetlistError(f"undeclared net '{f.d}' on d of '{f.id}'", lineno)
        if f.d in buf_ids:
            raise NetlistError(f"clock net '{f.d}' used as data by '{f.id}'", lineno)
        for b in f.clkpath:
            if b not in buf_ids:
                raise NetlistError(f"unknown clock buffer '{b}' in clkpath of '{f.id}'", lineno)
    for n, lineno, col in outputs:
        if n not in drivers:
            raise NetlistError(f"undeclared output net '{n}'", lineno, col)

    parent = {}
    for f, lineno in flops:
        prev = None
        for b in f.clkpath:
            if b in parent and parent[b] != prev:
                raise NetlistError(
                    f"clock buffer '{b}' has two different upstream drivers "
                    f"('{parent[b] or 'root'}' and '{prev or 'root'}')", lineno)
            parent[b] = prev
            prev = b

    for net, (lineno, col) in where.items():
        if net not in drivers:
            raise NetlistError(f"route for undeclared net '{net}'", lineno, col)
        if net in buf_ids and any(layer == "M5" for layer, _ in routes[net]):
            raise NetlistError(f"M5 is reserved for data nets, found on clock net '{net}'",
                               lineno, col)
    for net, lineno in drivers.items():
        if net not in routes:
            raise NetlistError(f"missing route for net '{net}'", lineno)

    nl = Netlist(
        period=period,
        inputs=tuple(inputs),
        outputs=tuple(n for n, _, _ in outputs),
        ties=tuple(ties),
        clock_buffers=tuple(b for b, _ in bufs),
        flops=tuple(f for f, _ in flops),
        gates=tuple(g for g, _ in gates),
        routes=routes,
    )
    nl.topo_gates  # raises on combinational cycles
    return nl


def read_netlist(path):
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())


def write_netlist(nl, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_netlist(nl))
