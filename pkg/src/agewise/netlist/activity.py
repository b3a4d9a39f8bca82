"""Zero-delay, cycle-based logic simulation producing duty-cycle / toggle statistics.

Duty cycle (DC) is the fraction of cycles a net sits at logic '0'.  Clock
buffer nets are not simulated; they are recorded as a 50% square wave that
switches every cycle.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import FormatError

_EVAL = {
    "INV": lambda a: ~a[0],
    "BUF": lambda a: a[0].copy(),
    "NAND2": lambda a: ~(a[0] & a[1]),
    "NOR2": lambda a: ~(a[0] | a[1]),
    "AND2": lambda a: a[0] & a[1],
    "OR2": lambda a: a[0] | a[1],
    "XOR2": lambda a: a[0] ^ a[1],
}


@dataclass(frozen=True)
class ActivityProfile:
    cycles: int
    dc: dict
    tc: dict

    def __post_init__(self):
        for net, v in self.dc.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"duty cycle out of range for {net}: {v}")
        for net, v in self.tc.items():
            if not 0 <= v <= self.cycles:
                raise ValueError(f"toggle count out of range for {net}: {v}")

    def tc_rate(self, net):
        return self.tc[net] / self.cycles


def simulate_activity(netlist, cycles=10_000, seed=0, input_one_prob=None):
    """Simulate ``cycles`` random clock cycles and collect per-net DC and TC.

    Primary inputs and flip-flop outputs are resampled every cycle, inputs
    first, in declaration order.  ``input_one_prob`` optionally overrides
    the probability of logic '1' for named primary inputs (0.0 ties an
    input low).
    """
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    probs = dict(input_one_prob or {})
    rng = np.random.default_rng(seed)
    values = {}
    for net in netlist.inputs:
        values[net] = rng.random(cycles) < probs.get(net, 0.5)
    for ff in netlist.flops:
        values[ff.q] = rng.random(cycles) < 0.5
    for net, v in netlist.ties:
        values[net] = np.full(cycles, bool(v))
    for g in netlist.topo_gates:
        values[g.output] = _EVAL[g.type]([values[n] for n in g.inputs])

    dc, tc = {}, {}
    for net, v in values.items():
        dc[net] = float(cycles - np.count_nonzero(v)) / cycles
        tc[net] = int(np.count_nonzero(v[1:] != v[:-1]))
    for b in netlist.clock_buffers:
        dc[b.id] = 0.5
        tc[b.id] = cycles
    return ActivityProfile(cycles, dc, tc)


def tc_bounds(activity):
    if not activity.tc:
        raise ValueError("empty activity profile")
    vals = activity.tc.values()
    return min(vals), max(vals)


def emit_activity(activity):
    lines = [f"cycles {activity.cycles}"]
    lines += [f"net {n} dc={activity.dc[n]!r} tc={activity.tc[n]}" for n in activity.dc]
    return "\n".join(lines) + "\n"


def parse_activity(text):
    cycles = None
    dc, tc = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        try:
            if line[0] == "cycles" and len(line) == 2:
                cycles = int(line[1])
            elif line[0] == "net" and len(line) == 4:
                name = line[1]
                if not line[2].startswith("dc=") or not line[3].startswith("tc="):
                    raise ValueError("expected dc=<float> tc=<int>")
                dc[name] = float(line[2][3:])
                tc[name] = int(line[3][3:])
            else:
                raise ValueError(f"unexpected statement '{line[0]}'")
        except ValueError as exc:
            raise FormatError(f"activity line {lineno}: {exc}") from None
    if cycles is None:
        raise FormatError("activity file lacks 'cycles' header")
    try:
        return ActivityProfile(cycles, dc, tc)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_activity(path):
    with open(path, encoding="utf-8") as fh:
        return parse_activity(fh.read())


def write_activity(activity, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_activity(activity))
