"""Why averaging over many paths works: group means of added delay on fresh chips.

Random process variation makes single-path added delays noisy.  Averaging
over a group shrinks that noise, at first roughly like 1/sqrt(n).  Paths in
one chip share gates, systematic variation and the chip's own GTM error, so
the group mean levels off near 1 ps instead of going to zero.  That floor is
still far below the 10 ps threshold, while single paths wander by more.

    python demos/04_averaging.py
"""

import numpy as np

from agewise import campaign as cp

cfg = cp.CampaignConfig(num_ffs=30)
world = cp.build_world(cfg, seed=7)

reports = [cp.detect_chip(world, cp.make_chip(world, f"f{i:02d}", 0))[1] for i in range(20)]
ids = sorted(set.intersection(*(set(r.ad) for r in reports)))
ad = np.array([[r.ad[p] for p in ids] for r in reports])

rng = np.random.default_rng(0)
print(f"{len(reports)} fresh chips, {len(ids)} paths with added delay\n")
print(f"{'n':>5} {'std of group mean':>18} {'single std/sqrt(n)':>19}")
for n in (1, 4, 16, 64, 256):
    if n > len(ids):
        break
    pick = rng.choice(len(ids), n, replace=False)
    single = np.sqrt(np.mean(ad[:, pick].var(axis=0, ddof=1)))
    print(f"{n:>5} {ad[:, pick].mean(axis=1).std(ddof=1):>18.3f} {single / np.sqrt(n):>19.3f}")

common = ad.mean(axis=1).std(ddof=1)
print(f"\nstd of the mean over all {len(ids)} paths: {common:.2f} ps (the common-mode floor)")
