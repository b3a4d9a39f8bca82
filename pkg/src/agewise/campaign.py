"""Study orchestration: world construction, chip matrix, detection, output tree.

A *world* is everything fixed at design time for one global seed: the
generated netlist, its timing paths, the designer's reference activity,
the gate aging model, the ADP sets and the process snapshot.  Chips are
then fabricated, aged under their own field activity, measured and judged.
"""

import configparser
import csv
import dataclasses
import io
import json
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aging import AgingConditions, build_gate_aging_db, fit_gate_age_model, instance_cells
from .cfst import CfstConfig, cfst_measure, emit_cfst
from .detector import (THRESHOLD_POLICIES, AdpSets, DetectConfig, Design, classify,
                       emit_dataset_csv, emit_histogram_csv, identify_adp, parse_report,
                       run_detection, threshold_from_policy)
from .errors import FormatError
from .fabsim import FabConfig, age_chip, emit_chip, fabricate, sample_fab_model
from .mlkit import BimodalFit, StackHyper
from .netlist import GenSpec, emit_activity, emit_netlist, generate_netlist, simulate_activity
from .netlist.activity import tc_bounds
from .netlist.library import CellLibrary
from .sta import elaborate, emit_paths, enumerate_paths

MAX_MONTHS = 12


def derive_seed(seed, tag):
    """Independent 32-bit seed for stream ``tag`` under global ``seed``."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(tag.encode())])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class CampaignConfig:
    num_ffs: int = 60
    gates_per_cone: int = 40
    depth: int = 14
    guardband_fraction: float = 0.1
    k_paths: int = 10
    fab: FabConfig = FabConfig()
    cycles: int = 10_000
    temperature: float = 125.0
    vdd: float = 0.85
    cfst: CfstConfig = CfstConfig()
    horizon: float = 12.0
    age_model_trees: int = 40
    th: float = 10.0
    th_policy: str = "step"  # step: Th = th; sigma / goal: calibrated on the fresh chips
    th_sigma: float = 3.0
    th_goal_fpr: float = 0.05
    counts: tuple = (20, 2, 2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1)  # chips per age 0..12
    write_chips: bool = False
    workers: int = 1

    def __post_init__(self):
        if len(self.counts) != MAX_MONTHS + 1 or min(self.counts) < 0:
            raise ValueError("counts needs 13 non-negative entries (months 0..12)")
        if self.th <= 0:
            raise ValueError("th must be positive")
        if self.th_policy not in THRESHOLD_POLICIES:
            raise ValueError(f"th_policy must be one of {THRESHOLD_POLICIES}")
        if not 0 <= self.horizon <= MAX_MONTHS:
            raise ValueError("horizon must lie in [0, 12]")

    def gen_spec(self, seed):
        return GenSpec(self.num_ffs, self.gates_per_cone, self.depth,
                       seed=derive_seed(seed, "netlist"),
                       guardband_fraction=self.guardband_fraction)

    def chip_matrix(self):
        """[(chip_id, months)] in output order."""
        out = []
        for months, n in enumerate(self.counts):
            out += [(f"m{months:02d}c{i:02d}", months) for i in range(n)]
        return out


# --- configuration file -------------------------------------------------

_SCHEMA = {
    # section.key: (attribute path, type)
    "gen.num_ffs": ("num_ffs", int),
    "gen.gates_per_cone": ("gates_per_cone", int),
    "gen.depth": ("depth", int),
    "gen.guardband_fraction": ("guardband_fraction", float),
    "sta.k_paths": ("k_paths", int),
    "fab.sigma_r": ("fab.sigma_r", float),
    "fab.sigma_s": ("fab.sigma_s", float),
    "fab.drift_gate": ("fab.drift_gate", "pair"),
    "fab.drift_layer": ("fab.drift_layer", "pair"),
    "fab.truncation": ("fab.truncation", float),
    "activity.cycles": ("cycles", int),
    "aging.temperature": ("temperature", float),
    "aging.vdd": ("vdd", float),
    "cfst.f_max_ghz": ("cfst.f_max_ghz", float),
    "cfst.step": ("cfst.step", float),
    "adp.horizon": ("horizon", float),
    "adp.age_model_trees": ("age_model_trees", int),
    "detect.th": ("th", float),
    "detect.th_policy": ("th_policy", str),
    "detect.th_sigma": ("th_sigma", float),
    "detect.th_goal_fpr": ("th_goal_fpr", float),
    "chips.counts": ("counts", "ints"),
    "run.write_chips": ("write_chips", "bool"),
    "run.workers": ("workers", int),
}

_COMMENTS = {
    "gen": "synthetic design: flip-flops, gates per logic cone, logic depth",
    "sta": "K longest paths kept per endpoint",
    "fab": "random / systematic variation sigmas and process drift ranges",
    "activity": "random-input simulation length for duty cycle / toggle counts",
    "aging": "stress conditions of field use",
    "cfst": "tester limits: max frequency (GHz) and period step (ps)",
    "adp": "aging horizon (months) used to pick the path sets",
    "detect": "mean-shift threshold in ps; policy step | sigma (mean + k std of fresh-chip MS)"
              " | goal (fresh-chip MS quantile at 1 - fpr)",
    "chips": "chips per age bucket, months 0..12",
    "run": "write per-chip arc dumps; worker processes",
}


def _get(cfg, path):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def _fmt_value(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def _parse_value(text, kind):
    text = text.strip()
    if kind == "pair":
        a, b = (float(x) for x in text.split(","))
        return a, b
    if kind == "ints":
        return tuple(int(x) for x in text.split(","))
    if kind == "bool":
        low = text.lower()
        if low not in ("yes", "no", "true", "false", "1", "0"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("yes", "true", "1")
    return kind(text)


def emit_config(cfg: CampaignConfig):
    lines = []
    current = None
    for key, (path, _) in _SCHEMA.items():
        section, name = key.split(".")
        if section != current:
            if current is not None:
                lines.append("")
            lines += [f"# {_COMMENTS[section]}", f"[{section}]"]
            current = section
        lines.append(f"{name} = {_fmt_value(_get(cfg, path))}")
    return "\n".join(lines) + "\n"


def apply_settings(cfg: CampaignConfig, settings):
    """Return ``cfg`` with ``{"section.key": "text"}`` settings applied."""
    top, fab, cfst = {}, {}, {}
    for key, text in settings.items():
        if key not in _SCHEMA:
            raise ValueError(f"unknown config key '{key}'")
        path, kind = _SCHEMA[key]
        try:
            value = _parse_value(text, kind)
        except ValueError as exc:
            raise ValueError(f"{key}: {exc}") from None
        if path.startswith("fab."):
            fab[path[4:]] = value
        elif path.startswith("cfst."):
            cfst[path[5:]] = value
        else:
            top[path] = value
    if fab:
        top["fab"] = dataclasses.replace(cfg.fab, **fab)
    if cfst:
        top["cfst"] = dataclasses.replace(cfg.cfst, **cfst)
    return dataclasses.replace(cfg, **top)


def parse_config(text, base=None):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    settings = {f"{s}.{k}": v for s in cp.sections() for k, v in cp[s].items()}
    return apply_settings(base or CampaignConfig(), settings)


def load_config(path=None, overrides=()):
    cfg = CampaignConfig()
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = parse_config(fh.read(), cfg)
    extra = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override '{item}' is not key=value")
        extra[key.strip()] = value
    return apply_settings(cfg, extra) if extra else cfg


# --- world and chips ----------------------------------------------------

@dataclass
class World:
    cfg: CampaignConfig
    seed: int
    lib: CellLibrary
    graph: object
    paths: list
    reference: object  # designer's activity profile
    age_model: object
    design: Design
    fab: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def netlist(self):
        return self.graph.netlist

    @property
    def conditions(self):
        return AgingConditions(self.cfg.horizon, self.cfg.temperature, self.cfg.vdd)


def reference_age_model(cfg: CampaignConfig, seed, netlist, lib, reference):
    """Gate aging sweep bounded by the reference activity, and its learned model."""
    cond = AgingConditions(cfg.horizon, cfg.temperature, cfg.vdd)
    lo, hi = tc_bounds(reference)
    cells = sorted({(t, x) for t, x, _ in instance_cells(netlist).values()})
    db = build_gate_aging_db(lib, lo, hi, reference.cycles, cond, cells=cells)
    return fit_gate_age_model(db, seed=derive_seed(seed, "age-model"),
                              n_estimators=cfg.age_model_trees)


def design_adp(cfg: CampaignConfig, seed, graph, paths, reference, age_model=None):
    if age_model is None:
        age_model = reference_age_model(cfg, seed, graph.netlist, graph.lib, reference)
    adp = identify_adp(graph, paths, age_model, reference, cfg.horizon, cfg.cfst,
                       gmm_seed=derive_seed(seed, "gmm"))
    return adp, age_model


def build_world(cfg: CampaignConfig, seed, age_model=None):
    lib = CellLibrary()
    nl = generate_netlist(cfg.gen_spec(seed))
    graph = elaborate(nl, lib)
    paths = enumerate_paths(graph, cfg.k_paths)
    ref = simulate_activity(nl, cfg.cycles, seed=derive_seed(seed, "reference-activity"))
    adp, age_model = design_adp(cfg, seed, graph, paths, ref, age_model)
    design = Design.build(graph, paths, adp)
    fab = sample_fab_model(cfg.fab, derive_seed(seed, "snapshot"))
    diag = {"paths": len(paths), "measurable": len(design.paths), "map": len(adp.map_ids),
            "lap": len(adp.lap_ids), "dropped": len(adp.dropped_ids),
            "gmm": adp.fit.as_dict(), "period_ps": nl.period,
            "age_model_min_r2": min(age_model.r2.values())}
    return World(cfg, seed, lib, graph, paths, ref, age_model, design, fab, diag)


def make_chip(world: World, chip_id, months):
    """Fabricate chip ``chip_id`` and age it ``months`` under its own field activity."""
    chip_seed = derive_seed(world.seed, f"chip:{chip_id}")
    chip = fabricate(world.graph, world.fab, chip_seed, chip_id)
    if months > 0:
        act_seed = derive_seed(world.seed, f"use:{chip_id}")
        use = simulate_activity(world.netlist, world.cfg.cycles, seed=act_seed)
        cond = AgingConditions(float(months), world.cfg.temperature, world.cfg.vdd)
        chip = age_chip(chip, world.graph, use, cond, activity_seed=act_seed)
    return chip


def detect_chip(world: World, chip, split_seed=None):
    meas = cfst_measure(chip, world.design.paths, world.cfg.cfst)
    seed = derive_seed(world.seed, "gtm-split") if split_seed is None else split_seed
    dcfg = DetectConfig(th=world.cfg.th, split_seed=seed, fold_seed=seed,
                        hyper=StackHyper(seed=seed))
    return meas, run_detection(chip.chip_id, meas.delays, world.design, dcfg)


def _chip_job(args):
    world, chip_id, months = args
    chip = make_chip(world, chip_id, months)
    meas, report = detect_chip(world, chip)
    return chip, meas, report


# --- output tree --------------------------------------------------------

SUMMARY_HEADER = ("chip_id", "months", "n_map_test", "m_lap", "mean_ad_map_ps",
                  "mean_ad_lap_ps", "ms_ps", "th_ps", "verdict")
MANIFEST_HEADER = ("chip_id", "months", "chip_seed", "activity_seed")


def _write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else ("" if x is None else x)
                    for x in row])
    return buf.getvalue()


def _csv_rows(text, header, what):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != header:
        raise FormatError(f"{what} header mismatch")
    return rows[1:]


def emit_adp(adp):
    d = {"map": list(adp.map_ids), "lap": list(adp.lap_ids), "dropped": list(adp.dropped_ids),
         "unmeasurable": list(adp.unmeasurable_ids), "fit": adp.fit.as_dict(),
         "predicted_ps": adp.predicted, "f_max_ghz": adp.f_max_ghz, "period_ps": adp.period,
         "horizon_months": adp.horizon}
    return json.dumps(d, sort_keys=True, indent=1) + "\n"


def parse_adp(text):
    try:
        d = json.loads(text)
        return AdpSets(tuple(d["map"]), tuple(d["lap"]), tuple(d["dropped"]),
                       tuple(d["unmeasurable"]), BimodalFit(**d["fit"]), d["predicted_ps"],
                       d["f_max_ghz"], d["period_ps"], d["horizon_months"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"adp file: {exc}") from None


def write_design(world: World, out):
    d = os.path.join(out, "design")
    _write(os.path.join(d, "netlist.nlf"), emit_netlist(world.netlist))
    _write(os.path.join(d, "reference.act"), emit_activity(world.reference))
    _write(os.path.join(d, "paths.txt"), emit_paths(world.paths))
    _write(os.path.join(d, "adp.json"), emit_adp(world.design.adp))
    ids = [p.id for p in world.design.paths]
    _write(os.path.join(d, "features.csv"), emit_dataset_csv(ids, world.design.features))
    _write(os.path.join(d, "world.json"),
           json.dumps({"seed": world.seed, **world.diagnostics}, sort_keys=True, indent=1)
           + "\n")


def emit_manifest(chips):
    return _csv_text(MANIFEST_HEADER, [(c.chip_id, c.age_months, c.chip_seed, c.activity_seed)
                                       for c in chips])


def parse_manifest(text):
    out = []
    for r in _csv_rows(text, MANIFEST_HEADER, "manifest"):
        out.append((r[0], float(r[1]), int(r[2]), int(r[3]) if r[3] else None))
    return out


def emit_summary_csv(rows):
    return _csv_text(SUMMARY_HEADER, rows)


def parse_summary_csv(text):
    return [(r[0], float(r[1]), int(r[2]), int(r[3]), float(r[4]), float(r[5]), float(r[6]),
             float(r[7]), r[8]) for r in _csv_rows(text, SUMMARY_HEADER, "summary CSV")]


def age_table(rows):
    """Per-age means: [(months, chips, mean MAP AD, mean LAP AD, mean MS, aged fraction)]."""
    by_age = {}
    for row in rows:
        by_age.setdefault(row[1], []).append(row)
    out = []
    for months in sorted(by_age):
        grp = by_age[months]
        out.append((months, len(grp), float(np.mean([r[4] for r in grp])),
                    float(np.mean([r[5] for r in grp])), float(np.mean([r[6] for r in grp])),
                    sum(r[8] == "aged" for r in grp) / len(grp)))
    return out


def format_age_table(table):
    lines = [f"{'months':>6} {'chips':>5} {'MAP AD':>9} {'LAP AD':>9} {'MS':>9} {'aged':>6}"]
    for months, n, a, b, ms, frac in table:
        lines.append(f"{months:>6g} {n:>5d} {a:>9.2f} {b:>9.2f} {ms:>9.2f} {frac:>6.0%}")
    return "\n".join(lines) + "\n"


def write_report(run_dir):
    """Summarise a finished run directory from its files; returns the summary rows.

    Writes ``summary.csv`` (one row per chip), ``summary.txt`` (per-age
    table) and checks that every chip has a report and histogram.
    """
    man_path = os.path.join(run_dir, "chips", "manifest.csv")
    if not os.path.exists(man_path):
        raise FormatError(f"incomplete run directory: {man_path} missing")
    rows = []
    for chip_id, months, _, _ in parse_manifest(_read(man_path)):
        rep_path = os.path.join(run_dir, "reports", chip_id + ".json")
        hist_path = os.path.join(run_dir, "hist", chip_id + ".csv")
        for p in (rep_path, hist_path):
            if not os.path.exists(p):
                raise FormatError(f"incomplete run directory: {p} missing")
        r = parse_report(_read(rep_path))
        rows.append((chip_id, months, r.n, r.m, r.mean_map, r.mean_lap, r.ms, r.th, r.verdict))
    _write(os.path.join(run_dir, "summary.csv"), emit_summary_csv(rows))
    _write(os.path.join(run_dir, "summary.txt"), format_age_table(age_table(rows)))
    return rows


def recalibrate(results, cfg: CampaignConfig):
    """Re-judge every chip with a threshold calibrated on the campaign's fresh chips."""
    fresh = [r.ms for c, _, r in results if c.age_months == 0 and r.valid]
    th = threshold_from_policy(cfg.th_policy, cfg.th, fresh, cfg.th_sigma, cfg.th_goal_fpr)
    for _, _, r in results:
        r.th = th
        if r.valid:
            r.verdict = classify(r.ms, th)
    return th


def run_campaign(cfg: CampaignConfig, seed, out=None, world=None):
    """Build the world, process every chip in the matrix, optionally write the tree.

    Returns ``(world, results)`` with results as ``(chip, measurement,
    report)`` in chip-matrix order regardless of ``cfg.workers``.
    """
    world = world or build_world(cfg, seed)
    jobs = [(world, cid, months) for cid, months in cfg.chip_matrix()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_chip_job, jobs))
    else:
        results = [_chip_job(j) for j in jobs]
    if cfg.th_policy != "step":
        recalibrate(results, cfg)
    if out is not None:
        _write(os.path.join(out, "config.ini"), emit_config(cfg))
        _write(os.path.join(out, "seed.txt"), f"{seed}\n")
        write_design(world, out)
        for chip, meas, report in results:
            base = os.path.join(out, "chips", chip.chip_id)
            if cfg.write_chips:
                _write(base + ".chip", emit_chip(chip))
            _write(base + ".cfst", emit_cfst(meas))
            _write(os.path.join(out, "reports", chip.chip_id + ".json"), report.to_json())
            _write(os.path.join(out, "hist", chip.chip_id + ".csv"),
                   emit_histogram_csv(report, world.design.adp))
        _write(os.path.join(out, "chips", "manifest.csv"),
               emit_manifest([c for c, _, _ in results]))
        write_report(out)
    return world, results
