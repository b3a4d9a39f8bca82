"""Mean shift of one chip as it ages month by month.

The same fabricated chip (same process sample, same field workload) is
re-aged for 0..12 months and re-tested.  MS climbs fast in the first months
and then flattens, following the sublinear NBTI time law.

    python demos/03_aging_trend.py
"""

import numpy as np

from agewise import campaign as cp

cfg = cp.CampaignConfig(num_ffs=30)
world = cp.build_world(cfg, seed=7)

ms = []
for months in range(13):
    _, rep = cp.detect_chip(world, cp.make_chip(world, "trend", months))
    ms.append(rep.ms)
    print(f"{months:2d} mo  MS {rep.ms:6.2f} ps  {'#' * max(int(rep.ms), 0)}  {rep.verdict}")

steps = np.diff(ms)
print(f"\nfirst-month jump {steps[0]:.1f} ps, mean later monthly step {steps[1:].mean():.2f} ps")
