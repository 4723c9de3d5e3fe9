"""Cost of the level-set group, direct vs through the 2d reduction.

The level-set features refit three classifiers per objective quantile and
dominate the feature budget as the dimension grows.  Running them on a
rank-weighted 2d projection keeps the sample size but collapses the
per-classifier cost; this script prints both medians and the ratio.
"""

import statistics

from elakit import harness

# the gap keeps widening with the dimension; 40 is the sweet spot for a demo
DIM = 40
REPS = 3

records = harness.time_features(
    ["ela_level", "d_ela_level"], dims=[DIM], reps=REPS, seed=7, m=2
)
by_group = {}
for rec in records:
    by_group.setdefault(rec.group, []).append(rec.seconds)

direct = statistics.median(by_group["ela_level"])
reduced = statistics.median(by_group["d_ela_level"])
print(f"dimension {DIM}, sample size {records[0].sample_size}, {REPS} reps")
print(f"  ela_level    median {direct:8.3f} s")
print(f"  d_ela_level  median {reduced:8.3f} s   (includes the reduction itself)")
print(f"  speedup      {direct / reduced:8.1f} x")
