"""Predict a landscape property of held-out functions from their features.

Assembles the plain C7 feature set over the whole suite at dimension 5,
then runs leave-one-problem-out cross-validation with a random forest.
Every fold hides one function entirely, so the forest has to generalize
from landscape structure, not memorize the function identity.

This is the quick, small-dimension version of the study; the full-size
check (dimension 40, the reduced level-set and meta-model groups added,
all fifteen instances) lives in tests/test_acceptance.py.
"""

from elakit import harness
from elakit.harness import FEATURE_SETS

TASK = "global_structure"

dataset = harness.assemble_dataset(
    FEATURE_SETS["C7"], dim=5, seed=0, instance_seeds=tuple(range(1, 11))
)
print(f"dataset: {dataset.n_rows} rows, {len(dataset.feature_names)} features")

result = harness.lopo_cv(dataset, TASK, n_trees=100, seed=0)
print(f"\nheld-out {TASK} accuracy vs majority baseline:")
for fid, acc, base in zip(
    result.fold_keys, result.fold_accuracies, result.baseline_accuracies
):
    print(f"  function {fid:2d}: {acc:.2f}  (baseline {base:.2f})")
print(f"\nmean accuracy {result.mean_accuracy:.3f}, "
      f"baseline {result.mean_baseline:.3f}")

ranked = sorted(
    zip(result.importance_avg_ranks, result.feature_names)
)[:5]
print("\nmost important features (average importance rank across folds):")
for rank, name in ranked:
    print(f"  {name:32s} {rank:.1f}")
