"""Standard-cell library: pin-to-pin delays, flip-flop timing, wire RC per layer."""

from dataclasses import dataclass, field
from types import MappingProxyType

GATE_TYPES = ("INV", "BUF", "NAND2", "NOR2", "AND2", "OR2", "XOR2")
DRIVES = ("x0", "x1", "x2", "x4", "x8", "x16")
LAYERS = ("M1", "M2", "M3", "M4", "M5")
ARITY = MappingProxyType(
    {"INV": 1, "BUF": 1, "NAND2": 2, "NOR2": 2, "AND2": 2, "OR2": 2, "XOR2": 2}
)

# x1 delays under the implicit FO4 load, ps
_BASE_X1 = {"INV": 14.0, "BUF": 22.0, "NAND2": 20.0, "NOR2": 25.0,
            "AND2": 28.0, "OR2": 31.0, "XOR2": 38.0}
_DRIVE_SCALE = {"x0": 1.35, "x1": 1.0, "x2": 0.8, "x4": 0.65, "x8": 0.55, "x16": 0.5}
_CAP_X1 = {"INV": 1.0, "BUF": 1.0, "NAND2": 1.3, "NOR2": 1.6,
           "AND2": 1.3, "OR2": 1.6, "XOR2": 2.2}
_CAP_SCALE = {"x0": 0.6, "x1": 1.0, "x2": 2.0, "x4": 4.0, "x8": 8.0, "x16": 16.0}
_WIRE = {"M1": 1.0, "M2": 0.8, "M3": 0.6, "M4": 0.45, "M5": 0.3}


def _default_delays():
    return {(g, d): round(_BASE_X1[g] * _DRIVE_SCALE[d], 6) for g in GATE_TYPES for d in DRIVES}


def _default_caps():
    return {(g, d): _CAP_X1[g] * _CAP_SCALE[d] for g in GATE_TYPES for d in DRIVES}


@dataclass(frozen=True)
class CellLibrary:
    """Delay data for every (gate type, drive) pair plus sequential and wire parameters.

    ``cell_delay`` and ``input_cap`` are keyed by ``(gate_type, drive)``;
    ``wire_delay`` maps a metal layer to ps per um.
    """

    cell_delay: dict = field(default_factory=_default_delays)
    input_cap: dict = field(default_factory=_default_caps)
    wire_delay: dict = field(default_factory=lambda: dict(_WIRE))
    clk_to_q: float = 40.0
    setup: float = 18.0
    vdd: float = 0.85
    vth0: float = 0.30

    def __post_init__(self):
        for g in GATE_TYPES:
            prev = float("inf")
            for d in DRIVES:
                delay = self.cell_delay[(g, d)]
                if not delay > 0:
                    raise ValueError(f"non-positive delay for {g} {d}")
                if delay > prev:
                    raise ValueError(f"delay of {g} increases with drive at {d}")
                prev = delay
        if tuple(sorted(self.wire_delay)) != LAYERS:
            raise ValueError("library must define exactly layers M1..M5")
        if min(self.wire_delay.values()) <= 0:
            raise ValueError("wire unit delays must be positive")
        if self.clk_to_q <= 0 or self.setup <= 0:
            raise ValueError("flip-flop timing must be positive")
        if self.vdd <= self.vth0:
            raise ValueError("vdd must exceed vth0")

    def delay(self, gate_type, drive):
        return self.cell_delay[(gate_type, drive)]

    def wire(self, layer, length):
        return self.wire_delay[layer] * length
