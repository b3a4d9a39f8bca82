"""One chip through the tester and the detector, fresh and after a year of use.

Each chip gets its own golden timing model trained on its MAP paths
(CFST - STA labels).  Aging inflates MAP delays far more than LAP delays, so
the mean added delay of the two groups drifts apart; the gap (MS) is compared
with the tester step.

    python demos/02_detect_one_chip.py
"""

from agewise import campaign as cp
from agewise.detector import emit_histogram_csv, parse_histogram_csv

cfg = cp.CampaignConfig(num_ffs=30)
world = cp.build_world(cfg, seed=7)

for months in (0, 12):
    chip = cp.make_chip(world, "dut", months)
    meas, rep = cp.detect_chip(world, chip)
    d = rep.diagnostics
    print(f"--- {months:2d} months ---")
    print(f"measured {len(meas.delays)} paths, {len(meas.unmeasurable)} below the tester floor")
    print("GTM validation RMSE (ps): "
          + ", ".join(f"{k} {v:.2f}" for k, v in d["val_rmse_members"].items())
          + f", stacked {d['val_rmse_stacked']:.2f}")
    print(f"mean AD: MAP test {rep.mean_map:+.2f} ps (n={rep.n}), "
          f"LAP {rep.mean_lap:+.2f} ps (m={rep.m})")
    print(f"MS = {rep.ms:.2f} ps vs Th = {rep.th:g} ps -> {rep.verdict}")
    rows = parse_histogram_csv(emit_histogram_csv(rep, world.design.adp))
    for group in ("MAP", "LAP"):
        v = sorted(x for _, g, x in rows if g == group)
        print(f"  {group} AD quartiles: "
              + " ".join(f"{v[int(q * (len(v) - 1))]:+.1f}" for q in (0.25, 0.5, 0.75)))
