"""Design-time view: a synthetic netlist, its longest paths and their predicted aging.

Generates a small design, enumerates the K longest paths per endpoint, simulates
the designer's reference activity and predicts how much every path slows down
after 12 months.  The predictions split into two clusters; the 2-component
mixture fit separates them into most / least aging-affected path sets.

    python demos/01_design_and_aging.py
"""

import numpy as np

from agewise import campaign as cp
from agewise.aging import predict_path_aging

cfg = cp.CampaignConfig(num_ffs=30)
world = cp.build_world(cfg, seed=7)
nl, adp = world.netlist, world.design.adp

print(f"design: {len(nl.gates)} gates, {len(nl.flops)} flip-flops, period {nl.period:.0f} ps")
print(f"paths: {len(world.paths)} enumerated, {len(world.design.paths)} measurable at "
      f"{cfg.cfst.f_max_ghz:g} GHz")

pred = predict_path_aging(world.graph, world.design.paths, world.age_model, world.reference, 12)
vals = np.array(list(pred.values()))
hist, edges = np.histogram(vals, bins=16)
print("\npredicted 12-month path slowdown (ps):")
for n, lo in zip(hist, edges):
    print(f"  {lo:6.1f} | {'#' * int(n // 2)}")

f = adp.fit
print(f"\nmixture: LAP mode {f.mu_lap:.1f} +- {f.sigma_lap:.1f} ps, "
      f"MAP mode {f.mu_map:.1f} +- {f.sigma_map:.1f} ps")
print(f"|MAP| = {len(adp.map_ids)}, |LAP| = {len(adp.lap_ids)}, "
      f"dropped mid-range = {len(adp.dropped_ids)}")

# the age model against the oracle it was learned from
r2 = world.age_model.r2
print(f"gate age model: {len(r2)} cells, worst held-out R^2 = {min(r2.values()):.4f}")
