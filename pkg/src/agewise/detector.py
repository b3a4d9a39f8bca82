"""Recycled-chip detection: path features, ADP sets, golden timing model, mean shift.

Per chip under test the flow is::

    label(p) = CFST(p) - STA(p)           on MAP paths, to train the model
    GTM(p)   = STA(p) + model(features(p))
    AD(p)    = CFST(p) - GTM(p)
    MS       = mean AD over held-out MAP - mean AD over LAP
    verdict  = aged  iff  Th <= MS
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .aging import predict_path_aging
from .cfst import CfstConfig
from .errors import DetectionError, FormatError
from .mlkit import StackHyper, fit_gmm2, fit_stacked
from .netlist.library import LAYERS

_PORTIONS = ("lp", "dp", "cp")
_LOW_DRIVES = ("x0", "x1", "x2", "x4", "x8")

FEATURE_NAMES = tuple(
    [f"wire_{p}_{m}_um" for p in _PORTIONS for m in LAYERS[:4]] + ["wire_dp_M5_um"]
    + [f"cells_{p}" for p in _PORTIONS]
    + [f"drive_{p}_{x}" for p in _PORTIONS for x in _LOW_DRIVES] + ["drive_dp_x16"]
    + ["setup_ps", "delay_lp_ps", "delay_dp_ps", "delay_cp_ps", "sta_delay_ps"]
    + ["fanout_total"]
)
assert len(FEATURE_NAMES) == 38
_INDEX = {n: i for i, n in enumerate(FEATURE_NAMES)}


def _drive_of(netlist, inst):
    g = netlist.gate_by_id.get(inst)
    if g is not None:
        return g.drive
    b = netlist.clkbuf_by_id.get(inst)
    return None if b is None else b.drive


def extract_features(path, graph):
    """The 38-entry feature vector of one timing path (design-time values only)."""
    nl = graph.netlist
    v = np.zeros(38)
    fanout = 0
    for portion, arc_ids in zip(_PORTIONS, (path.lp, path.dp, path.cp)):
        insts = {}  # instance -> output net, in path order
        total = 0.0
        for a in arc_ids:
            arc = graph.arc.get(a)
            if arc is None:
                raise DetectionError("features", f"path {path.id}: unknown arc '{a}'")
            total += arc.delay
            if arc.kind == "wire":
                layer, length = nl.routes[arc.net][int(a.rsplit(":", 1)[1])]
                key = f"wire_{portion}_{layer}_um"
                if key not in _INDEX:
                    raise DetectionError("features", f"path {path.id}: {layer} in {portion}")
                v[_INDEX[key]] += length
            else:
                insts.setdefault(arc.instance, arc.net)
        for inst, net in insts.items():
            fanout += nl.fanout[net]
            drive = _drive_of(nl, inst)
            if drive is None:  # the launching flip-flop
                continue
            v[_INDEX[f"cells_{portion}"]] += 1
            key = f"drive_{portion}_{drive}"
            if key not in _INDEX:
                raise DetectionError("features", f"path {path.id}: {drive} in {portion}")
            v[_INDEX[key]] += 1
        v[_INDEX[f"delay_{portion}_ps"]] = total
    v[_INDEX["setup_ps"]] = path.setup
    v[_INDEX["sta_delay_ps"]] = path.delay
    v[_INDEX["fanout_total"]] = fanout
    return v


def feature_matrix(paths, graph):
    return np.array([extract_features(p, graph) for p in paths]).reshape(len(paths), 38)


@dataclass(frozen=True)
class AdpSets:
    map_ids: tuple
    lap_ids: tuple
    dropped_ids: tuple
    unmeasurable_ids: tuple
    fit: object
    predicted: dict  # path id -> predicted aging at the horizon, ps
    f_max_ghz: float
    period: float
    horizon: float


def identify_adp(graph, paths, age_model, activity, horizon=12.0, cfst_cfg=CfstConfig(),
                 gmm_seed=0, min_paths=100):
    """Split paths into most- and least-aging-affected sets from predicted aging."""
    floor = cfst_cfg.min_period
    keep = [p for p in paths if p.delay >= floor]
    unmeasurable = tuple(p.id for p in paths if p.delay < floor)
    if len(keep) < min_paths:
        raise DetectionError("adp", f"only {len(keep)} measurable paths (need {min_paths})")
    pred = predict_path_aging(graph, keep, age_model, activity, horizon)
    values = np.array([pred[p.id] for p in keep])
    fit = fit_gmm2(values, seed=gmm_seed)
    if fit.single_mode:
        raise DetectionError("adp", "no age-distinguishing structure in predicted aging")
    map_cut = fit.mu_map - 2.0 * fit.sigma_map
    lap_cut = fit.mu_lap + 2.0 * fit.sigma_lap
    maps, laps, dropped = [], [], []
    for p, x in zip(keep, values):
        is_map, is_lap = x > map_cut, x < lap_cut
        if is_map and not is_lap:
            maps.append(p.id)
        elif is_lap and not is_map:
            laps.append(p.id)
        else:  # mid-range, or claimed by both cuts
            dropped.append(p.id)
    return AdpSets(tuple(maps), tuple(laps), tuple(dropped), unmeasurable, fit,
                   {p.id: float(x) for p, x in zip(keep, values)}, cfst_cfg.f_max_ghz,
                   graph.period, float(horizon))


def split_ids(ids, seed, fractions=(0.6, 0.2, 0.2)):
    """Seeded train/validation/test partition of ``ids`` (order of ``ids`` irrelevant)."""
    ids = sorted(ids)
    perm = np.random.default_rng(seed).permutation(len(ids))
    n_tr = int(round(fractions[0] * len(ids)))
    n_va = int(round(fractions[1] * len(ids)))
    pick = [ids[i] for i in perm]
    return (tuple(sorted(pick[:n_tr])), tuple(sorted(pick[n_tr:n_tr + n_va])),
            tuple(sorted(pick[n_tr + n_va:])))


def _rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


@dataclass
class GoldenTimingModel:
    model: object
    train_ids: tuple
    val_ids: tuple
    test_ids: tuple
    diagnostics: dict = field(default_factory=dict)

    def predict(self, sta, features):
        """``STA + model(features)`` for aligned arrays."""
        return np.asarray(sta, float) + self.model.predict(np.atleast_2d(features))


def build_gtm(sta, cfst, features, adp: AdpSets, split_seed=0, hyper=StackHyper(),
              fold_seed=0, min_map=50):
    """Train the delta model on the MAP training split.

    ``sta``, ``cfst`` and ``features`` map path id -> value / feature row.
    """
    if len(adp.map_ids) < min_map:
        raise DetectionError("gtm", f"|MAP| = {len(adp.map_ids)} < {min_map}")
    tr, va, te = split_ids(adp.map_ids, split_seed)
    missing = [p for p in adp.map_ids if p not in cfst]
    if missing:
        raise DetectionError("gtm", f"no measurement for MAP path '{missing[0]}'")
    X = np.array([features[p] for p in tr])
    y = np.array([cfst[p] - sta[p] for p in tr])
    model = fit_stacked(X, y, hyper, fold_seed)
    gtm = GoldenTimingModel(model, tr, va, te)
    diag = {"n_train": len(tr), "n_val": len(va), "n_test": len(te),
            "members": list(model.names), "excluded": dict(model.excluded),
            "combiner_coef": [float(c) for c in model.combiner.coef]}
    if va:
        Xv = np.array([features[p] for p in va])
        yv = np.array([cfst[p] - sta[p] for p in va])
        per = model.member_predictions(Xv)
        diag["val_rmse_members"] = {n: _rmse(per[:, i], yv) for i, n in enumerate(model.names)}
        diag["val_rmse_stacked"] = _rmse(model.combiner.predict(per), yv)
    gtm.diagnostics = diag
    return gtm


def added_delays(cfst, gtm_delay, path_ids=None):
    """``AD = CFST - GTM`` per path id."""
    ids = list(gtm_delay) if path_ids is None else list(path_ids)
    out = {}
    for pid in ids:
        if pid not in cfst:
            raise DetectionError("added_delay", f"no measurement for path '{pid}'")
        if pid not in gtm_delay:
            raise DetectionError("added_delay", f"no model delay for path '{pid}'")
        out[pid] = cfst[pid] - gtm_delay[pid]
    return out


def mean_shift(ad, map_ids, lap_ids):
    """(mean AD over ``map_ids``, mean AD over ``lap_ids``, their difference)."""
    if not map_ids or not lap_ids:
        raise DetectionError("mean_shift", "empty MAP or LAP group")
    a = float(np.mean([ad[p] for p in sorted(map_ids)]))
    b = float(np.mean([ad[p] for p in sorted(lap_ids)]))
    return a, b, a - b


def classify(ms, th=10.0):
    if not th > 0:
        raise ValueError("threshold must be positive")
    return "aged" if th <= ms else "new"


THRESHOLD_POLICIES = ("step", "sigma", "goal")


def threshold_from_policy(policy, step=10.0, fresh_ms=(), m_sigma=3.0, goal_fpr=0.05):
    """Decision threshold Th (ps).

    ``step`` uses the tester step.  The other two need MS values of chips
    known to be fresh: ``sigma`` puts Th at mean + m_sigma * std of them,
    ``goal`` at their (1 - goal_fpr) quantile so that roughly ``goal_fpr``
    of fresh chips would be flagged.  Both are clamped to stay positive.
    """
    if policy == "step":
        return float(step)
    if policy not in THRESHOLD_POLICIES:
        raise ValueError(f"unknown threshold policy '{policy}'")
    ms = np.asarray(fresh_ms, float)
    ms = ms[np.isfinite(ms)]
    if len(ms) < 2:
        raise DetectionError("threshold", f"policy '{policy}' needs >= 2 fresh-chip MS values")
    if policy == "sigma":
        th = ms.mean() + m_sigma * ms.std(ddof=1)
    else:
        if not 0 < goal_fpr < 1:
            raise ValueError("goal_fpr must lie in (0, 1)")
        th = np.quantile(ms, 1.0 - goal_fpr)
    return float(max(th, 1e-9))


@dataclass(frozen=True)
class DetectConfig:
    th: float = 10.0
    split_seed: int = 0
    fold_seed: int = 0
    hyper: StackHyper = StackHyper()


@dataclass(frozen=True)
class Design:
    """Design-time artifacts shared by every chip of a campaign."""

    graph: object
    paths: tuple  # measurable TimingPaths
    features: dict  # path id -> feature row
    sta: dict  # path id -> STA delay
    adp: AdpSets

    @classmethod
    def build(cls, graph, paths, adp):
        keep = set(adp.map_ids) | set(adp.lap_ids) | set(adp.dropped_ids)
        paths = tuple(p for p in paths if p.id in keep)
        return cls(graph, paths, {p.id: extract_features(p, graph) for p in paths},
                   {p.id: p.delay for p in paths}, adp)


@dataclass
class DetectionReport:
    chip_id: str
    n: int = 0
    m: int = 0
    mean_map: float = float("nan")
    mean_lap: float = float("nan")
    ms: float = float("nan")
    th: float = 10.0
    verdict: str = "invalid"
    diagnostics: dict = field(default_factory=dict)
    error_stage: str | None = None
    error: str | None = None
    ad: dict = field(default_factory=dict, repr=False)  # path id -> AD, all MAP + LAP

    @property
    def valid(self):
        return self.error is None

    def to_dict(self):
        d = asdict(self)
        d.pop("ad")
        return d

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def parse_report(text):
    d = json.loads(text)
    for k in ("mean_map", "mean_lap", "ms"):
        if d.get(k) is None:
            d[k] = float("nan")
    try:
        return DetectionReport(**d)
    except TypeError as exc:
        raise FormatError(f"report: {exc}") from None


def run_detection(chip_id, cfst, design: Design, cfg: DetectConfig = DetectConfig()):
    """GTM -> AD -> MS -> verdict for one chip's CFST measurements (path id -> ps)."""
    report = DetectionReport(chip_id, th=cfg.th)
    stage = "gtm"
    try:
        gtm = build_gtm(design.sta, cfst, design.features, design.adp, cfg.split_seed,
                        cfg.hyper, cfg.fold_seed)
        stage = "added_delay"
        eval_ids = list(design.adp.map_ids) + list(design.adp.lap_ids)
        X = np.array([design.features[p] for p in eval_ids])
        sta = np.array([design.sta[p] for p in eval_ids])
        pred = dict(zip(eval_ids, gtm.predict(sta, X).tolist()))
        ad = added_delays(cfst, pred, eval_ids)
        stage = "mean_shift"
        a, b, ms = mean_shift(ad, gtm.test_ids, design.adp.lap_ids)
    except DetectionError as exc:
        report.error_stage, report.error = exc.stage, str(exc.cause)
        return report
    except Exception as exc:  # noqa: BLE001 - surfaced in the report, not raised
        report.error_stage, report.error = stage, f"{type(exc).__name__}: {exc}"
        return report
    report.n, report.m = len(gtm.test_ids), len(design.adp.lap_ids)
    report.mean_map, report.mean_lap, report.ms = a, b, ms
    report.verdict = classify(ms, cfg.th)
    report.diagnostics = gtm.diagnostics
    report.ad = ad
    return report


def emit_dataset_csv(path_ids, features, labels=None):
    """Feature rows (and ``label_ps`` when given) keyed by ``path_id``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", *FEATURE_NAMES, "label_ps"])
    for pid in path_ids:
        lab = "" if labels is None or pid not in labels else repr(float(labels[pid]))
        w.writerow([pid, *(repr(float(x)) for x in features[pid]), lab])
    return buf.getvalue()


def parse_dataset_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["path_id", *FEATURE_NAMES, "label_ps"]:
        raise FormatError("dataset CSV header mismatch")
    feats, labels = {}, {}
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != 40:
            raise FormatError(f"dataset CSV line {i}: expected 40 fields")
        try:
            feats[r[0]] = np.array([float(x) for x in r[1:39]])
            if r[39]:
                labels[r[0]] = float(r[39])
        except ValueError as exc:
            raise FormatError(f"dataset CSV line {i}: {exc}") from None
    return feats, labels


def emit_histogram_csv(report: DetectionReport, adp: AdpSets):
    """AD per evaluated path with its group tag, for external plotting."""
    lap = set(adp.lap_ids)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", "group", "value_ps"])
    for pid in sorted(report.ad, key=lambda p: (p in lap, p)):
        w.writerow([pid, "LAP" if pid in lap else "MAP", repr(float(report.ad[pid]))])
    return buf.getvalue()


def parse_histogram_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["path_id", "group", "value_ps"]:
        raise FormatError("histogram CSV header mismatch")
    try:
        return [(r[0], r[1], float(r[2])) for r in rows[1:]]
    except (IndexError, ValueError) as exc:
        raise FormatError(f"histogram CSV: {exc}") from None
