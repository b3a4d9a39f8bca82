"""Static timing: timing-graph elaboration, K-longest register paths, retiming.

A timing path is split into the launch clock portion (LP, clock root to the
launch flip-flop), the data portion (DP, clock-to-q arc, cells and wires up
to the capture D pin) and the capture clock portion (CP).  Its delay is::

    delay = LP + DP + setup - CP        slack = period - delay
"""

import heapq
from collections import defaultdict
from dataclasses import dataclass

from .errors import FormatError, TimingError

ROOT = "@clk"


@dataclass(frozen=True)
class Arc:
    id: str
    src: str
    dst: str
    delay: float
    kind: str  # "cell", "wire" or "ctq"
    instance: str | None
    net: str | None
    layer: str | None = None


class TimingGraph:
    """Immutable arc graph of one netlist under one library.

    Node names: ``@clk`` is the clock root, ``<net>`` is the load side of a
    net and ``<net>@drv`` its driver side.  Wire segments chain the driver
    side to the load side.
    """

    def __init__(self, netlist, lib, arcs):
        self.netlist = netlist
        self.lib = lib
        self.arcs = tuple(arcs)
        self.arc = {a.id: a for a in self.arcs}
        self.setup = lib.setup
        self.period = netlist.period
        succ = defaultdict(list)
        for a in self.arcs:
            succ[a.src].append(a)
        self.succ = {n: tuple(v) for n, v in succ.items()}
        self._clock_arcs = {}
        for ff in netlist.flops:
            self._clock_arcs[ff.id] = self._clock_path(ff)

    def _clock_path(self, ff):
        out = []
        for b in ff.clkpath:
            out.append(f"c:{b}:0")
            segs = self.netlist.routes[b]
            out.extend(f"w:{b}:{i}" for i in range(len(segs)))
        return tuple(out)

    def clock_arcs(self, ff_id):
        try:
            return self._clock_arcs[ff_id]
        except KeyError:
            raise TimingError(f"unknown flip-flop '{ff_id}'") from None

    def endpoint_node(self, ff_id):
        ff = self.netlist.flop_by_id.get(ff_id)
        if ff is None:
            raise TimingError(f"unknown endpoint '{ff_id}'")
        return ff.d

    def endpoints(self):
        return [ff.id for ff in self.netlist.flops]


def elaborate(netlist, lib):
    arcs = []
    parent = netlist.clock_parent
    for b in netlist.clock_buffers:
        src = parent.get(b.id) or ROOT
        arcs.append(Arc(f"c:{b.id}:0", src, f"{b.id}@drv", lib.delay("BUF", b.drive),
                        "cell", b.id, b.id))
    for ff in netlist.flops:
        arcs.append(Arc(f"q:{ff.id}", ff.clkpath[-1], f"{ff.q}@drv", lib.clk_to_q,
                        "ctq", ff.id, ff.q))
    for g in netlist.gates:
        d = lib.delay(g.type, g.drive)
        for i, n in enumerate(g.inputs):
            arcs.append(Arc(f"c:{g.id}:{i}", n, f"{g.output}@drv", d, "cell", g.id, g.output))
    for net, segs in netlist.routes.items():
        prev = f"{net}@drv"
        for i, (layer, length) in enumerate(segs):
            nxt = net if i == len(segs) - 1 else f"{net}@{i}"
            arcs.append(Arc(f"w:{net}:{i}", prev, nxt, lib.wire(layer, length),
                            "wire", None, net, layer))
            prev = nxt
    return TimingGraph(netlist, lib, arcs)


def k_longest_dag(succ, source, target, k):
    """K maximum-weight source->target paths of a DAG.

    ``succ`` maps node -> iterable of ``(arc_id, dst, weight)``.  Returns
    ``[(weight, (arc_id, ...)), ...]`` by descending weight, ties broken by
    lexicographic arc-id sequence.  Best-first search over path prefixes
    ranked by prefix weight plus the exact longest completion.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    # exact longest completion to target for nodes that reach it
    order, seen = [], set()
    stack = [(source, iter(succ.get(source, ())))]
    seen.add(source)
    while stack:
        node, it = stack[-1]
        for _, dst, _ in it:
            if dst not in seen:
                seen.add(dst)
                stack.append((dst, iter(succ.get(dst, ()))))
                break
        else:
            stack.pop()
            order.append(node)
    best = {}
    for node in order:  # post-order: successors first
        if node == target:
            best[node] = 0.0
            continue
        vals = [w + best[dst] for _, dst, w in succ.get(node, ()) if dst in best]
        if vals:
            best[node] = max(vals)
    if source not in best:
        return []

    heap = [(-best[source], (), source, 0.0)]
    found = []
    eps = 1e-9
    while heap:
        neg_bound, arcs, node, g = heap[0]
        if len(found) >= k and -neg_bound < found[k - 1][0] - eps:
            break
        heapq.heappop(heap)
        if node == target:
            found.append((g, arcs))
            found.sort(key=lambda t: (-round(t[0], 6), t[1]))
            continue
        for arc_id, dst, w in succ.get(node, ()):
            if dst in best:
                g2 = g + w
                heapq.heappush(heap, (-(g2 + best[dst]), arcs + (arc_id,), dst, g2))
    return found[:k]


@dataclass(frozen=True)
class TimingPath:
    id: str
    endpoint: str
    lp: tuple
    dp: tuple
    cp: tuple
    setup: float
    delay: float
    slack: float

    @property
    def launch(self):
        return self.dp[0][2:]

    @property
    def arcs(self):
        return self.lp + self.dp + self.cp


def _segment_sum(graph, arc_ids, overrides):
    total = 0.0
    for a in arc_ids:
        total += overrides[a] if a in overrides else graph.arc[a].delay
    return total


def path_delay(graph, path, overrides=None):
    overrides = overrides or {}
    for key in overrides:
        if key not in graph.arc:
            raise TimingError(f"override for unknown arc '{key}'")
    d = (_segment_sum(graph, path.lp, overrides) + _segment_sum(graph, path.dp, overrides)
         + path.setup - _segment_sum(graph, path.cp, overrides))
    if d < 0:
        raise TimingError(f"negative delay {d:.3f} ps on path {path.id}")
    return d


def _build_path(graph, endpoint, rank, arcs):
    split = next(i for i, a in enumerate(arcs) if graph.arc[a].kind == "ctq")
    lp, dp = tuple(arcs[:split]), tuple(arcs[split:])
    cp = graph.clock_arcs(endpoint)
    tmp = TimingPath(f"{endpoint}.{rank}", endpoint, lp, dp, cp, graph.setup, 0.0, 0.0)
    d = path_delay(graph, tmp)
    return TimingPath(tmp.id, endpoint, lp, dp, cp, graph.setup, d, graph.period - d)


def _succ_view(graph):
    view = getattr(graph, "_succ_view", None)
    if view is None:
        view = {n: tuple((a.id, a.dst, a.delay) for a in arcs) for n, arcs in graph.succ.items()}
        graph._succ_view = view
    return view


def k_longest_paths(graph, endpoint, k):
    """The ``k`` longest register-to-register paths captured by ``endpoint``."""
    target = graph.endpoint_node(endpoint)
    found = k_longest_dag(_succ_view(graph), ROOT, target, k)
    return [_build_path(graph, endpoint, i, arcs) for i, (_, arcs) in enumerate(found)]


def enumerate_paths(graph, k=10, min_delay=None):
    """K longest paths for every flip-flop endpoint, optionally floored by delay."""
    out = []
    for ep in graph.endpoints():
        for p in k_longest_paths(graph, ep, k):
            if min_delay is None or p.delay >= min_delay:
                out.append(p)
    return out


def retime_increments(graph, paths, increment):
    """Per-path delay change when every cell arc grows by its instance's increment.

    Wire arcs do not change.  Capture-clock increments subtract, so the
    result may be negative.
    """
    known = set(graph.netlist.gate_by_id) | set(graph.netlist.flop_by_id) \
        | set(graph.netlist.clkbuf_by_id)
    for inst, v in increment.items():
        if inst not in known:
            raise TimingError(f"unknown instance '{inst}'")
        if v < 0:
            raise TimingError(f"negative increment for '{inst}'")

    def seg(arc_ids):
        s = 0.0
        for a in arc_ids:
            inst = graph.arc[a].instance
            if inst is not None:
                s += increment.get(inst, 0.0)
        return s

    return {p.id: seg(p.lp) + seg(p.dp) - seg(p.cp) for p in paths}


def emit_paths(paths):
    lines = [
        f"path {p.id} ep={p.endpoint} d={p.delay!r} s={p.slack!r} "
        f"lp={','.join(p.lp)} dp={','.join(p.dp)} cp={','.join(p.cp)}"
        for p in paths
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_paths(text, setup):
    """Parse a ``.paths`` dump; ``setup`` comes from the library in use."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        if toks[0] != "path" or len(toks) != 8:
            raise FormatError(f"paths line {lineno}: malformed")
        fields = {}
        for t in toks[2:]:
            key, sep, val = t.partition("=")
            if not sep:
                raise FormatError(f"paths line {lineno}: bad field '{t}'")
            fields[key] = val
        try:
            seq = {k: tuple(fields[k].split(",")) if fields[k] else () for k in ("lp", "dp", "cp")}
            out.append(TimingPath(toks[1], fields["ep"], seq["lp"], seq["dp"], seq["cp"],
                                  setup, float(fields["d"]), float(fields["s"])))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"paths line {lineno}: {exc}") from None
    return out


def read_paths(path, setup):
    with open(path, encoding="utf-8") as fh:
        return parse_paths(fh.read(), setup)


def write_paths(paths, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_paths(paths))
