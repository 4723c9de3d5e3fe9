"""Minimal tour: make an instance, sample it, compute a few feature groups."""

import numpy as np

from elakit import dimred, sampling, testbed
from elakit.features import FeatureConfig, compute_group

# a moderately multimodal suite member at dimension 5
instance = testbed.make_instance(function_id=10, dimension=5, instance_seed=1)
labels = testbed.function_labels(10)
print(f"function: {instance.name}, multimodality label: {labels.multimodality}")

design = sampling.build_design(instance, 250, seed=42)
print(f"design: {design.points.shape[0]} points in {design.points.shape[1]}d, "
      f"y range [{design.objectives.min():.3f}, {design.objectives.max():.3f}]")

config = FeatureConfig(seed=0)
for group in ("ela_distr", "nbc", "ic"):
    vec = compute_group(group, design, config)
    print(f"\n{group}:")
    for name, value in vec.entries:
        shown = "None" if value is None else f"{value:.4f}"
        print(f"  {name:28s} {shown}")

# the same group on a rank-weighted 2d reduction of the design
reduced = dimred.reduce(design, m=2)
vec = compute_group("ela_distr", reduced, config)
print("\nela_distr on the reduced sample (objectives are untouched):")
for name, value in vec.entries:
    shown = "None" if value is None else f"{value:.4f}"
    print(f"  {name:28s} {shown}")
assert np.array_equal(reduced.objectives, design.objectives)
