"""Transistor aging: parametric NBTI/HCI oracle, gate aging database, learned age model.

The oracle is the ground truth of the simulated world.  Threshold shift::

    dVth = A_N * (1 - DC)**0.5 * (t / t_ref)**0.16 * theta
         + A_H * rate**0.5     * (t / t_ref)**0.5  * theta

with DC the fraction of time the gate output is '0' (pull-up under stress
otherwise) and ``rate`` the toggle count per cycle.  The delay shift is
first-order in the overdrive: ``d_delay = base * dVth / (vdd - vth0)``.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AgingError, FitError
from .netlist.library import DRIVES, GATE_TYPES

NBTI_EXP = 0.16
HCI_EXP = 0.5
DC_STEP = 0.05
TC_STEPS = 50
MONTHS = tuple(range(1, 13))


@dataclass(frozen=True)
class AgingConditions:
    months: float = 12.0
    temperature: float = 125.0
    vdd: float = 0.85

    def __post_init__(self):
        if self.months < 0:
            raise AgingError("months must be >= 0")


@dataclass(frozen=True)
class OracleParams:
    a_nbti: float = 0.050  # V at t_ref, full stress
    a_hci: float = 0.030  # V at t_ref, one toggle per cycle
    t_ref: float = 12.0  # months
    ea_nbti: float = 0.1  # eV, temperature acceleration
    ea_hci: float = 0.05
    t_nominal: float = 125.0


_K_B = 8.617e-5


def _theta(temp_c, ea, t_nominal):
    t = temp_c + 273.15
    t0 = t_nominal + 273.15
    return math.exp(-ea / _K_B * (1.0 / t - 1.0 / t0))


def oracle_delta_vth(gate_type, dc, tc_rate, cond, params=OracleParams()):
    if gate_type not in GATE_TYPES and gate_type != "DFF":
        raise AgingError(f"unknown gate type '{gate_type}'")
    if not 0.0 <= dc <= 1.0:
        raise AgingError(f"duty cycle {dc} outside [0, 1]")
    if not 0.0 <= tc_rate <= 1.0:
        raise AgingError(f"toggle rate {tc_rate} outside [0, 1]")
    if cond.months < 0:
        raise AgingError("months must be >= 0")
    if cond.months == 0:
        return 0.0
    x = cond.months / params.t_ref
    nbti = params.a_nbti * math.sqrt(1.0 - dc) * x ** NBTI_EXP \
        * _theta(cond.temperature, params.ea_nbti, params.t_nominal)
    hci = params.a_hci * math.sqrt(tc_rate) * x ** HCI_EXP \
        * _theta(cond.temperature, params.ea_hci, params.t_nominal)
    return nbti + hci


def delay_sensitivity(cond, lib):
    """Relative delay change per volt of threshold shift."""
    if cond.vdd <= lib.vth0:
        raise AgingError("vdd must exceed vth0")
    return 1.0 / (cond.vdd - lib.vth0)


def oracle_delta_delay(gate_type, drive, dc, tc, cycles, cond, lib, params=OracleParams()):
    if tc > cycles or tc < 0:
        raise AgingError(f"toggle count {tc} outside [0, {cycles}]")
    dvth = oracle_delta_vth(gate_type, dc, tc / cycles, cond, params)
    return lib.delay(gate_type, drive) * dvth * delay_sensitivity(cond, lib)


def oracle_grid(base_delay, dc, tc_rate, months, cond, lib, params=OracleParams()):
    """Vectorised oracle over broadcastable arrays (same formula as the scalar path)."""
    dc, tc_rate, months = np.broadcast_arrays(
        np.asarray(dc, float), np.asarray(tc_rate, float), np.asarray(months, float))
    x = months / params.t_ref
    nbti = params.a_nbti * np.sqrt(1.0 - dc) * x ** NBTI_EXP \
        * _theta(cond.temperature, params.ea_nbti, params.t_nominal)
    hci = params.a_hci * np.sqrt(tc_rate) * x ** HCI_EXP \
        * _theta(cond.temperature, params.ea_hci, params.t_nominal)
    return base_delay * (nbti + hci) * delay_sensitivity(cond, lib)


@dataclass(frozen=True)
class GateAgingDB:
    """Aging sweep records per (gate_type, drive): columns dc, tc, months, delta_ps."""

    records: dict
    tc_min: int
    tc_max: int
    cycles: int
    dc_step: float = DC_STEP
    tc_step: float = 0.0

    def table(self, gate_type, drive):
        return self.records[(gate_type, drive)]


def _grid_axes(tc_min, tc_max):
    dcs = np.round(np.arange(21) * DC_STEP, 10)
    if tc_max == tc_min:
        tcs = np.array([float(tc_min)])
    else:
        step = (tc_max - tc_min) / TC_STEPS
        tcs = tc_min + step * np.arange(TC_STEPS + 1)
        tcs[-1] = tc_max
    return dcs, tcs


def build_gate_aging_db(lib, tc_min, tc_max, cycles, cond=AgingConditions(),
                        params=OracleParams(), cells=None):
    """Sweep every cell over DC x TC x months 1..12 with the oracle.

    ``cond`` supplies temperature and supply; its ``months`` is ignored.
    """
    if tc_min > tc_max:
        raise AgingError("tc_min must not exceed tc_max")
    dcs, tcs = _grid_axes(tc_min, tc_max)
    d, t, m = np.meshgrid(dcs, tcs, np.array(MONTHS, float), indexing="ij")
    d, t, m = d.ravel(), t.ravel(), m.ravel()
    records = {}
    for gate_type, drive in cells or [(g, x) for g in GATE_TYPES for x in DRIVES]:
        delta = oracle_grid(lib.delay(gate_type, drive), d, t / cycles, m, cond, lib, params)
        records[(gate_type, drive)] = np.column_stack([d, t, m, delta])
    step = (tc_max - tc_min) / TC_STEPS
    return GateAgingDB(records, tc_min, tc_max, cycles, DC_STEP, step)


def emit_db_csv(db):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gate", "drive", "dc", "tc", "months", "delta_ps"])
    for (g, x), rows in db.records.items():
        for dc, tc, mo, delta in rows:
            w.writerow([g, x, repr(float(dc)), repr(float(tc)), int(mo), repr(float(delta))])
    return buf.getvalue()


def parse_db_csv(text, tc_min, tc_max, cycles):
    rows = {}
    reader = csv.DictReader(io.StringIO(text))
    for r in reader:
        rows.setdefault((r["gate"], r["drive"]), []).append(
            (float(r["dc"]), float(r["tc"]), float(r["months"]), float(r["delta_ps"])))
    return GateAgingDB({k: np.array(v) for k, v in rows.items()}, tc_min, tc_max, cycles,
                       DC_STEP, (tc_max - tc_min) / TC_STEPS)


@dataclass
class GateAgeModel:
    """Per-cell regressors mapping (DC, TC, months) to aging delay increase in ps.

    Each regressor predicts ``log(delta + offset)``, so tree error is
    relative error across the whole range of the surface.
    """

    models: dict
    r2: dict = field(default_factory=dict)
    cycles: int = 10_000
    offsets: dict = field(default_factory=dict)

    def predict(self, gate_type, drive, dc, tc, months):
        dc, tc, months = np.broadcast_arrays(np.asarray(dc, float), np.asarray(tc, float),
                                             np.asarray(months, float))
        key = (gate_type, drive)
        raw = self.models[key].predict(np.column_stack([dc.ravel(), tc.ravel(), months.ravel()]))
        out = np.maximum(np.exp(raw) - self.offsets[key], 0.0)
        out[months.ravel() <= 0] = 0.0
        return out.reshape(dc.shape)


def fit_gate_age_model(db, seed=0, n_estimators=100, learning_rate=0.3, max_depth=10,
                       min_r2=0.99):
    """Fit one gradient-boosted tree ensemble per cell on an 80/20 split of its grid."""
    from .mlkit import fit_gbt

    models, r2, offsets = {}, {}, {}
    worst = (None, 1.0)
    for key, rows in db.records.items():
        X, y = rows[:, :3], rows[:, 3]
        rng = np.random.default_rng([seed, GATE_TYPES.index(key[0]), DRIVES.index(key[1])])
        perm = rng.permutation(len(y))
        cut = int(round(0.8 * len(y)))
        tr, te = perm[:cut], perm[cut:]
        offsets[key] = max(1e-3 * float(y.max()), 1e-12)
        models[key] = fit_gbt(X[tr], np.log(y[tr] + offsets[key]), n_estimators=n_estimators,
                              learning_rate=learning_rate, max_depth=max_depth, seed=seed)
        model = GateAgeModel(models, r2, db.cycles, offsets)
        pred = model.predict(key[0], key[1], X[te, 0], X[te, 1], X[te, 2])
        ss = float(np.sum((y[te] - y[te].mean()) ** 2))
        score = 1.0 - float(np.sum((y[te] - pred) ** 2)) / ss if ss > 0 else 1.0
        r2[key] = score
        if score < worst[1]:
            worst = (key, score)
    if worst[0] is not None and worst[1] < min_r2:
        raise FitError(f"gate age model R^2 {worst[1]:.4f} below {min_r2} for {worst[0]}")
    return GateAgeModel(models, r2, db.cycles, offsets)


def instance_cells(netlist):
    """instance id -> (gate_type, drive, output net) for every agable instance."""
    cells = {g.id: (g.type, g.drive, g.output) for g in netlist.gates}
    for b in netlist.clock_buffers:
        cells[b.id] = ("BUF", b.drive, b.id)
    for f in netlist.flops:  # sequential cells age like a BUF x1
        cells[f.id] = ("BUF", "x1", f.q)
    return cells


def predict_instance_aging(netlist, model, activity, months):
    cells = instance_cells(netlist)
    missing = [net for _, _, net in cells.values() if net not in activity.dc]
    if missing:
        raise AgingError(f"no activity for net '{missing[0]}'")
    if months <= 0:
        return dict.fromkeys(cells, 0.0)
    by_cell = {}
    for inst, (g, x, net) in cells.items():
        by_cell.setdefault((g, x), []).append((inst, net))
    out = {}
    for (g, x), members in by_cell.items():
        dc = [activity.dc[n] for _, n in members]
        tc = [activity.tc[n] for _, n in members]
        pred = model.predict(g, x, dc, tc, months)
        for (inst, _), v in zip(members, pred):
            out[inst] = float(v)
    return out


def predict_path_aging(graph, paths, model, activity, months):
    from .sta import retime_increments

    inc = predict_instance_aging(graph.netlist, model, activity, months)
    return retime_increments(graph, paths, inc)
