from .activity import (ActivityProfile, emit_activity, parse_activity, read_activity,
                       simulate_activity, tc_bounds, write_activity)
from .generate import GenSpec, cone_flavours, generate_netlist
from .library import ARITY, DRIVES, GATE_TYPES, LAYERS, CellLibrary
from .model import (ClockBuffer, FlipFlop, Gate, Netlist, emit_netlist, parse_netlist,
                    read_netlist, write_netlist)

__all__ = [
    "ActivityProfile", "emit_activity", "parse_activity", "read_activity", "simulate_activity",
    "tc_bounds", "write_activity", "GenSpec", "cone_flavours", "generate_netlist", "ARITY",
    "DRIVES", "GATE_TYPES", "LAYERS", "CellLibrary", "ClockBuffer", "FlipFlop", "Gate",
    "Netlist", "emit_netlist", "parse_netlist", "read_netlist", "write_netlist",
]
