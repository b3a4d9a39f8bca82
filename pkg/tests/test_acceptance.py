"""Acceptance suite A1-A9.

Each criterion prints one ``PASS``/``FAIL`` line (visible with ``pytest -s``
or in the ``-v`` log) and then asserts.  The end-to-end criteria share
worlds and campaigns through module-scoped fixtures; a full run takes
roughly a quarter of an hour on one core.
"""

import dataclasses
import hashlib
import os
import time

import numpy as np
import pytest

from agewise import campaign as cp
from agewise.cfst import emit_cfst, parse_cfst, quantize
from agewise.detector import parse_histogram_csv, parse_report, split_ids
from agewise.fabsim import FabConfig, sample_fab_model
from agewise.mlkit import StackHyper, fit_gmm2, fit_lasso, fit_ridge, fit_stacked
from agewise.mlkit.mlp import init_params, loss_and_grad
from agewise.sta import enumerate_paths, k_longest_dag, retime_increments
from test_sta import _exhaustive, _random_dag

CFG = cp.CampaignConfig()
A1_SEEDS = (0, 1, 2)
A3_SEEDS = (0, 1, 2, 3, 4)


def _verdict(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def _tree_hash(root):
    h = hashlib.sha256()
    for d, _, files in sorted(os.walk(root)):
        for f in sorted(files):
            p = os.path.join(d, f)
            h.update(os.path.relpath(p, root).encode())
            with open(p, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def _ranks(x):
    x = np.asarray(x, float)
    order = np.argsort(x, kind="stable")
    r = np.empty(len(x))
    r[order] = np.arange(len(x), dtype=float)
    for v in np.unique(x):  # average ranks over ties
        tie = x == v
        r[tie] = r[tie].mean()
    return r


def spearman(a, b):
    return float(np.corrcoef(_ranks(a), _ranks(b))[0, 1])


# --- shared end-to-end state ------------------------------------------------

@pytest.fixture(scope="module")
def campaigns(tmp_path_factory):
    """The default campaign for each A1 seed: {seed: (world, results, seconds, out)}."""
    out = {}
    for seed in A1_SEEDS:
        run = str(tmp_path_factory.mktemp(f"a1s{seed}") / "run") if seed == 0 else None
        t0 = time.perf_counter()
        world, results = cp.run_campaign(CFG, seed, run)
        out[seed] = (world, results, time.perf_counter() - t0, run)
    return out


@pytest.fixture(scope="module")
def worlds(campaigns):
    w = {seed: v[0] for seed, v in campaigns.items()}
    for seed in A3_SEEDS:
        if seed not in w:
            w[seed] = cp.build_world(CFG, seed)
    return w


@pytest.fixture(scope="module")
def fresh50(campaigns):
    """Reports for 50 fresh chips of seed 0's snapshot (20 from A1 plus 30 more)."""
    world, results, _, _ = campaigns[0]
    reports = [r for c, _, r in results if c.age_months == 0]
    for i in range(50 - len(reports)):
        chip = cp.make_chip(world, f"x00c{i:02d}", 0)
        reports.append(cp.detect_chip(world, chip)[1])
    return world, reports


# --- A1 .. A6: end to end ---------------------------------------------------

def test_a1_discrimination(campaigns, capsys):
    fp = fn = 0
    young = young_hit = 0
    invalid = []
    worst = 0.0
    sizes = []
    for seed, (world, results, secs, _) in campaigns.items():
        d = world.diagnostics
        sizes.append((d["measurable"], d["map"], d["lap"]))
        worst = max(worst, secs)
        for chip, _, r in results:
            if not r.valid:
                invalid.append(chip.chip_id)
            m = chip.age_months
            if m == 0:
                fp += r.verdict == "aged"
            elif m >= 3:
                fn += r.verdict != "aged"
            else:
                young += 1
                young_hit += r.verdict == "aged"
    shape_ok = all(n >= 500 and a >= 100 and b >= 100 for n, a, b in sizes)
    ok = (shape_ok and not invalid and fp == 0 and fn == 0 and young_hit >= 0.9 * young
          and worst <= 600)
    _verdict(capsys, "A1", ok,
             f"paths/MAP/LAP per seed {sizes}; FP={fp} FN(>=3mo)={fn} "
             f"1-2mo detected {young_hit}/{young}; invalid={len(invalid)}; "
             f"slowest campaign {worst:.0f}s")


def test_a2_fresh_null(fresh50, capsys):
    _, reports = fresh50
    ms = np.array([r.ms for r in reports])
    below = np.mean(ms < CFG.th)
    ok = len(ms) == 50 and abs(ms.mean()) < CFG.cfst.step / 2 and below >= 0.95
    _verdict(capsys, "A2", ok,
             f"50 fresh chips: mean MS={ms.mean():.2f} ps, max {ms.max():.2f} ps, "
             f"{below:.0%} below Th")


def test_a3_aging_trend(worlds, capsys):
    rhos, details, ok = [], [], True
    for seed in A3_SEEDS:
        world = worlds[seed]
        ms = [cp.detect_chip(world, cp.make_chip(world, "trend", m))[1].ms for m in range(13)]
        rho = spearman(np.arange(13), ms)
        rhos.append(rho)
        ordered = ms[12] > ms[1] > ms[0] + CFG.th
        saturating = ms[2] - ms[1] < ms[1] - ms[0]
        ok &= ordered and saturating
        details.append(f"s{seed}: MS0={ms[0]:.1f} MS1={ms[1]:.1f} MS2={ms[2]:.1f} "
                       f"MS12={ms[12]:.1f} rho={rho:.2f}")
    ok &= float(np.mean(rhos)) >= 0.9
    _verdict(capsys, "A3", ok, f"mean rho={np.mean(rhos):.3f}; " + "; ".join(details))


def test_a4_variance_reduction(fresh50, capsys):
    world, reports = fresh50
    ids = sorted(set.intersection(*(set(r.ad) for r in reports)))
    ad = np.array([[r.ad[p] for p in ids] for r in reports])  # chips x paths
    rng = np.random.default_rng(cp.derive_seed(0, "a4-subsets"))
    ok, details = True, []
    for n in (25, 100, 400):
        pick = rng.choice(len(ids), size=min(n, len(ids)), replace=False)
        sub = ad[:, pick]
        single = np.sqrt(np.mean(sub.var(axis=0, ddof=1)))
        expected = single / np.sqrt(len(pick))
        empirical = sub.mean(axis=1).std(ddof=1)
        ratio = empirical / expected
        ok &= 0.5 <= ratio <= 2.0
        details.append(f"n={len(pick)}: std {empirical:.3f} vs sigma/sqrt(n) {expected:.3f} "
                       f"(x{ratio:.2f})")
    _verdict(capsys, "A4", ok, f"{len(ids)} AD paths; " + "; ".join(details))


def test_a5_drift_absorption(worlds, capsys):
    base = worlds[0]
    cfg = dataclasses.replace(CFG, fab=FabConfig(sigma_r=0.0, sigma_s=0.0))
    world = dataclasses.replace(base, cfg=cfg,
                                fab=sample_fab_model(cfg.fab, cp.derive_seed(0, "snapshot")))
    _, report = cp.detect_chip(world, cp.make_chip(world, "drift", 0))
    test_ids = split_ids(world.design.adp.map_ids, cp.derive_seed(0, "gtm-split"))[2]
    err = np.abs([report.ad[p] for p in test_ids])
    frac = float(np.mean(err <= cfg.cfst.step))
    _verdict(capsys, "A5", report.valid and frac >= 0.95,
             f"{frac:.1%} of {len(test_ids)} MAP test paths within one step "
             f"(max |CFST-GTM| {err.max():.2f} ps)")


def test_a6_map_residual(campaigns, capsys):
    means = [r.mean_map for _, results, _, _ in campaigns.values() for _, _, r in results]
    worst = float(np.max(np.abs(means)))
    _verdict(capsys, "A6", worst <= 5.0,
             f"max |mean AD over MAP test| = {worst:.2f} ps over {len(means)} chips")


# --- A7, A8: oracles --------------------------------------------------------

def _a7_checks():
    out = {}
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 6))
    y = X @ rng.normal(size=6) + 2.5 + 0.1 * rng.normal(size=200)
    ols = np.linalg.lstsq(np.column_stack([X, np.ones(200)]), y, rcond=None)[0]
    m = fit_ridge(X, y, 1e-12)
    out["ridge=OLS"] = max(np.max(np.abs(m.coef - ols[:-1])), abs(m.intercept - ols[-1])) <= 1e-8

    Q, _ = np.linalg.qr(rng.normal(size=(400, 5)))
    Q, _ = np.linalg.qr(Q - Q.mean(axis=0))
    Xo = Q * np.sqrt(400)
    yo = Xo @ np.array([3.0, -2.0, 0.5, 0.0, -0.05]) + 0.01 * rng.normal(size=400)
    z = Xo.T @ (yo - yo.mean()) / 400
    soft = np.sign(z) * np.maximum(np.abs(z) - 0.3, 0)
    out["lasso soft-threshold"] = np.max(np.abs(
        fit_lasso(Xo, yo, 0.3, tol=1e-12, max_iter=10_000).coef - soft)) <= 1e-6

    Xm, ym = rng.normal(size=(30, 5)), rng.normal(size=30)
    params = init_params(5, 23, rng)
    params[3] = np.asarray(0.3)
    _, grads = loss_and_grad(params, Xm, ym)
    worst = 0.0
    for p, g in zip(params, grads):
        flat, gf = p.reshape(-1), np.asarray(g).reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + 1e-6
            up = loss_and_grad(params, Xm, ym)[0]
            flat[i] = old - 1e-6
            down = loss_and_grad(params, Xm, ym)[0]
            flat[i] = old
            num = (up - down) / 2e-6
            worst = max(worst, abs(num - gf[i]) / max(abs(num), abs(gf[i]), 1e-6))
    out["MLP gradient"] = worst < 1e-4

    x = np.concatenate([rng.normal(0, 1, 500), rng.normal(30, 2, 500)])
    f = fit_gmm2(x)
    out["GMM planted"] = abs(f.mu_lap) <= 0.5 and abs(f.mu_map - 30) <= 0.5
    out["EM monotone"] = bool(np.all(np.diff(f.history) >= -1e-10))

    counts = rng.integers(0, 8, (300, 6)).astype(float)
    wires = rng.uniform(0, 40, (300, 4))
    Xs = np.column_stack([counts, wires])
    ys = counts @ np.array([-2.0, -1.2, -0.6, -1.5, -0.3, -2.2]) + 0.05 * wires[:, 0] \
        - 0.02 * wires[:, 1] * (counts[:, 0] > 3) + rng.normal(0, 0.8, 300)
    tr, va = np.arange(180), np.arange(180, 240)
    sm = fit_stacked(Xs[tr], ys[tr], StackHyper(), fold_seed=1)
    per = sm.member_predictions(Xs[va])
    best = min(np.sqrt(np.mean((per[:, i] - ys[va]) ** 2)) for i in range(per.shape[1]))
    out["stacked RMSE"] = np.sqrt(np.mean((sm.predict(Xs[va]) - ys[va]) ** 2)) <= 1.1 * best
    return out


def test_a7_mlkit_oracles(capsys):
    checks = _a7_checks()
    _verdict(capsys, "A7", all(checks.values()),
             ", ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items()))


def test_a8_sta_oracles(five_graph, capsys):
    rng = np.random.default_rng(2024)
    dag_ok = True
    for _ in range(200):
        n = int(rng.integers(2, 13))
        succ = _random_dag(rng, n)
        ref = _exhaustive(succ, 0, n - 1)
        for k in (1, 10, 50):
            got = k_longest_dag(succ, 0, n - 1, k)
            dag_ok &= [a for _, a in got] == [a for _, a in ref[:k]]
    p = next(p for p in enumerate_paths(five_graph, 10) if p.endpoint == "fb"
             and p.launch == "fa")
    skew = retime_increments(five_graph, [p], {"ckl1": 6.0})[p.id]
    d = np.random.default_rng(1).uniform(250.0, 5000.0, 100_000)
    q = np.array([quantize(v, 10.0) for v in d])
    quant_ok = bool(np.all(q - d >= 0) and np.all(q - d < 10.0))
    ok = dag_ok and skew < 0 and quant_ok
    _verdict(capsys, "A8", ok, f"200 DAGs match exhaustive={dag_ok}; CP-only buffer "
             f"aging gives {skew:+.1f} ps; 1e5 quantisation bound={quant_ok}")


# --- A9: determinism and formats --------------------------------------------

def test_a9_determinism(campaigns, tmp_path, capsys):
    _, _, _, first = campaigns[0]
    again = str(tmp_path / "rerun")
    cp.run_campaign(CFG, 0, again)
    same = _tree_hash(first) == _tree_hash(again)
    # every emitted file goes back through its parser
    rows = cp.write_report(again)
    rt = True
    for chip_id, *_ in rows:
        text = open(os.path.join(again, "chips", chip_id + ".cfst")).read()
        rt &= emit_cfst(parse_cfst(text)) == text
        rep = open(os.path.join(again, "reports", chip_id + ".json")).read()
        rt &= parse_report(rep).to_json() == rep
        parse_histogram_csv(open(os.path.join(again, "hist", chip_id + ".csv")).read())
    adp = open(os.path.join(again, "design", "adp.json")).read()
    rt &= cp.emit_adp(cp.parse_adp(adp)) == adp
    cfg_text = open(os.path.join(again, "config.ini")).read()
    rt &= cp.emit_config(cp.parse_config(cfg_text)) == cfg_text
    _verdict(capsys, "A9", same and rt,
             f"rerun tree hash identical={same}; round trips={rt} over {len(rows)} chips")
