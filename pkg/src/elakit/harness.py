"""Experiment drivers: feature-cost timing, property classification, and
original-vs-reduced feature similarity.

The drivers reproduce the three studies at desk scale: wall-clock cost of
each feature group as dimension grows, random-forest prediction of the
seven expert labels under leave-one-problem-out / leave-one-instance-out
cross-validation, and rank similarity between features computed on the
original design and on its reduced counterpart.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import dimred, ml, testbed
from .errors import BudgetExceededError
from .features import ALL_GROUPS, FeatureConfig, compute_group
from .sampling import build_design, default_design_size
from .testbed import DEFAULT_INSTANCE_SEEDS, PROPERTY_NAMES, SUITE_FUNCTION_IDS

__all__ = [
    "FeatureSetSpec",
    "FEATURE_SETS",
    "TimingRecord",
    "Dataset",
    "CvResult",
    "SweepTable",
    "DESK_DIMS",
    "EXTENDED_DIMS",
    "DEFAULT_REPS",
    "DEFAULT_BUDGET_SECONDS",
    "DEFAULT_TREES",
    "PAPER_TREES",
    "time_features",
    "assemble_dataset",
    "lopo_cv",
    "loio_cv",
    "sweep_m",
    "similarity",
]

DESK_DIMS = (2, 3, 5, 10, 20, 40, 80, 160)
EXTENDED_DIMS = DESK_DIMS + (320, 640)
DEFAULT_REPS = 5
DEFAULT_BUDGET_SECONDS = 600.0
DEFAULT_TREES = 100
PAPER_TREES = 1000


@dataclass(frozen=True)
class FeatureSetSpec:
    """A named menu of feature groups with original/reduced flags."""

    name: str
    groups: tuple  # of (group_name, reduced: bool)

    def requires_reduction(self) -> bool:
        return any(reduced for _, reduced in self.groups)


_C7 = tuple((g, False) for g in ("ela_distr", "basic", "ic", "disp", "nbc", "pca", "limo"))
_E2 = ("ela_level", "ela_meta")
_C4 = ("gcm", "cm_angle", "cm_conv", "cm_grad")

FEATURE_SETS = {
    "C7": FeatureSetSpec("C7", _C7),
    "C7-E2": FeatureSetSpec("C7-E2", _C7 + tuple((g, False) for g in _E2)),
    "C7-D2": FeatureSetSpec("C7-D2", _C7 + tuple((g, True) for g in _E2)),
    "C7-C4": FeatureSetSpec("C7-C4", _C7 + tuple((g, False) for g in _C4)),
    "C7-D4": FeatureSetSpec("C7-D4", _C7 + tuple((g, True) for g in _C4)),
}


@dataclass(frozen=True)
class TimingRecord:
    group: str
    dimension: int
    sample_size: int
    rep: int
    seconds: float | None  # None when the run hit the budget
    status: str            # "ok" or "timeout"


def _derived_seed(*parts: int) -> int:
    mixed = 0
    for part in parts:
        mixed = (mixed * 1000003 + int(part)) & 0xFFFFFFFFFFFFFFFF
    return mixed


def time_features(
    groups,
    dims,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    function_id: int = 1,
    instance_seed: int = 1,
    sample_size: int | None = None,
    budget_seconds: float = DEFAULT_BUDGET_SECONDS,
    m: int = dimred.DEFAULT_REDUCED_DIMENSION,
) -> list[TimingRecord]:
    """Wall-clock cost of feature groups on fresh designs of one instance.

    Group names may carry the ``d_`` prefix to request computation on the
    reduced sample; those timings include the reduction step itself.  Design
    construction is never part of the measured time.  A run that exceeds
    budget_seconds is recorded with no seconds value and status "timeout".
    """
    records = []
    for group in groups:
        base = group[2:] if group.startswith("d_") else group
        if base not in ALL_GROUPS:
            raise ValueError(f"unknown feature group {group!r}")
        for dim in dims:
            l = sample_size if sample_size is not None else default_design_size(dim)
            instance = testbed.make_instance(function_id, dim, instance_seed)
            for rep in range(reps):
                design = build_design(instance, l, _derived_seed(seed, dim, rep))
                start = time.perf_counter()
                config = FeatureConfig(
                    seed=_derived_seed(seed, dim, rep, 1),
                    deadline=start + budget_seconds if budget_seconds else None,
                )
                try:
                    if group.startswith("d_"):
                        reduced = dimred.reduce(design, m)
                        compute_group(base, reduced, config)
                    else:
                        compute_group(base, design, config)
                    seconds = time.perf_counter() - start
                    records.append(
                        TimingRecord(group, dim, l, rep, seconds, "ok")
                    )
                except BudgetExceededError:
                    records.append(TimingRecord(group, dim, l, rep, None, "timeout"))
    return records


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with one row per (function, instance) plus labels."""

    matrix: np.ndarray           # (rows, features), imputed unless raw
    feature_names: tuple
    function_ids: np.ndarray     # (rows,)
    instance_seeds: np.ndarray   # (rows,)
    labels: dict                 # property name -> (rows,) label array
    feature_set: str
    dimension: int

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]


def assemble_dataset(
    feature_set: FeatureSetSpec,
    dim: int,
    seed: int = 0,
    function_ids=SUITE_FUNCTION_IDS,
    instance_seeds=DEFAULT_INSTANCE_SEEDS,
    sample_size: int | None = None,
    m: int = dimred.DEFAULT_REDUCED_DIMENSION,
    drop_and_impute: bool = True,
    budget_seconds: float | None = None,
) -> Dataset:
    """Compute a feature set over the whole suite at one dimension.

    Columns whose non-undefined values take at most one distinct value are
    dropped (they cannot separate anything); remaining undefined entries are
    imputed by the column median.  Pass drop_and_impute=False to keep the
    raw values (used by the similarity study).
    """
    l = sample_size if sample_size is not None else default_design_size(dim)
    rows = []
    names = None
    fids, insts = [], []
    deadline = time.perf_counter() + budget_seconds if budget_seconds else None
    for fid in function_ids:
        for inst in instance_seeds:
            instance = testbed.make_instance(fid, dim, inst)
            design = build_design(instance, l, _derived_seed(seed, fid, dim, inst))
            reduced = (
                dimred.reduce(design, m) if feature_set.requires_reduction() else None
            )
            config = FeatureConfig(
                seed=_derived_seed(seed, fid, dim, inst, 1), deadline=deadline
            )
            row = []
            row_names = []
            for group, use_reduced in feature_set.groups:
                vector = compute_group(
                    group, reduced if use_reduced else design, config
                )
                row_names += vector.names()
                row += vector.values()
            if names is None:
                names = row_names
            elif names != row_names:
                raise RuntimeError("feature name mismatch across instances")
            rows.append(row)
            fids.append(fid)
            insts.append(inst)
    if not rows:
        raise ValueError("empty dataset")
    raw = np.array(
        [[np.nan if v is None else float(v) for v in row] for row in rows]
    )
    fids = np.asarray(fids)
    insts = np.asarray(insts)
    if drop_and_impute:
        keep = []
        for j in range(raw.shape[1]):
            col = raw[:, j]
            finite = col[np.isfinite(col)]
            if finite.size and np.unique(finite).size > 1:
                keep.append(j)
        raw = raw[:, keep]
        names = [names[j] for j in keep]
        for j in range(raw.shape[1]):
            col = raw[:, j]
            hole = ~np.isfinite(col)
            if hole.any():
                col[hole] = np.median(col[~hole])
    labels = {
        prop: np.array(
            [getattr(testbed.function_labels(fid), prop) for fid in fids]
        )
        for prop in PROPERTY_NAMES
    }
    return Dataset(
        matrix=raw,
        feature_names=tuple(names),
        function_ids=fids,
        instance_seeds=insts,
        labels=labels,
        feature_set=feature_set.name,
        dimension=dim,
    )


@dataclass(frozen=True)
class CvResult:
    task: str
    feature_set: str
    dimension: int
    fold_keys: tuple             # held-out function id or instance seed per fold
    fold_accuracies: tuple
    mean_accuracy: float
    baseline_accuracies: tuple   # majority-class-of-training accuracy per fold
    mean_baseline: float
    feature_names: tuple
    importance_avg_ranks: np.ndarray
    skipped_folds: tuple = field(default_factory=tuple)


def _grouped_cv(dataset: Dataset, task: str, group_values, n_trees: int, seed: int) -> CvResult:
    y = dataset.labels[task]
    accs, baselines, keys, skipped = [], [], [], []
    rank_sum = np.zeros(len(dataset.feature_names))
    rank_folds = 0
    for fold_no, key in enumerate(np.unique(group_values)):
        test = group_values == key
        train = ~test
        y_train = y[train]
        if np.unique(y_train).size < 2:
            skipped.append(key)
            continue
        model = ml.forest_train(
            dataset.matrix[train], y_train, n_trees, _derived_seed(seed, fold_no)
        )
        pred = ml.forest_predict(model, dataset.matrix[test])
        accs.append(float(np.mean(pred == y[test])))
        classes, counts = np.unique(y_train, return_counts=True)
        majority = classes[np.argmax(counts)]
        baselines.append(float(np.mean(y[test] == majority)))
        keys.append(key)
        rank_sum += rankdata(-model.importances, method="average")
        rank_folds += 1
    if not accs:
        raise ValueError("every fold had single-class training labels")
    return CvResult(
        task=task,
        feature_set=dataset.feature_set,
        dimension=dataset.dimension,
        fold_keys=tuple(keys),
        fold_accuracies=tuple(accs),
        mean_accuracy=float(np.mean(accs)),
        baseline_accuracies=tuple(baselines),
        mean_baseline=float(np.mean(baselines)),
        feature_names=dataset.feature_names,
        importance_avg_ranks=rank_sum / max(rank_folds, 1),
        skipped_folds=tuple(skipped),
    )


def lopo_cv(dataset: Dataset, task: str, n_trees: int = DEFAULT_TREES, seed: int = 0) -> CvResult:
    """Leave-one-problem-out CV: one fold per suite function."""
    return _grouped_cv(dataset, task, dataset.function_ids, n_trees, seed)


def loio_cv(dataset: Dataset, task: str, n_trees: int = DEFAULT_TREES, seed: int = 0) -> CvResult:
    """Leave-one-instance-out CV: one fold per instance seed."""
    return _grouped_cv(dataset, task, dataset.instance_seeds, n_trees, seed)


@dataclass(frozen=True)
class SweepTable:
    dims: tuple
    m_values: tuple
    accuracy: np.ndarray  # (len(dims), len(m_values)); NaN marks Na cells

    def cell(self, dim: int, m: int):
        value = self.accuracy[self.dims.index(dim), self.m_values.index(m)]
        return None if np.isnan(value) else float(value)


def sweep_m(
    dataset_builder,
    dims,
    m_values,
    task: str,
    n_trees: int = DEFAULT_TREES,
    seed: int = 0,
) -> SweepTable:
    """Mean LOPO accuracy over a (dimension, reduced-dimension) grid.

    dataset_builder(dim, m) must return a Dataset; cells with m >= dim are
    not computable and stay Na.
    """
    table = np.full((len(dims), len(m_values)), np.nan)
    for i, dim in enumerate(dims):
        for j, m in enumerate(m_values):
            if m >= dim:
                continue
            dataset = dataset_builder(dim, m)
            result = lopo_cv(dataset, task, n_trees, _derived_seed(seed, dim, m))
            table[i, j] = result.mean_accuracy
    return SweepTable(dims=tuple(dims), m_values=tuple(m_values), accuracy=table)


def similarity(original: Dataset, reduced: Dataset) -> list[tuple]:
    """Kendall tau between per-function feature means, original vs reduced.

    Features pair up by name modulo the ``d_`` prefix.  A feature is skipped
    when either side has undefined function means or all-tied values (tau
    would be undefined).  Returns (feature, tau, n_functions) tuples.
    """
    functions = np.unique(original.function_ids)
    if functions.size < 3:
        raise ValueError("similarity needs at least 3 functions")
    reduced_cols = {
        name[2:] if name.startswith("d_") else name: k
        for k, name in enumerate(reduced.feature_names)
    }
    shared = [
        (name, j, reduced_cols[name])
        for j, name in enumerate(original.feature_names)
        if name in reduced_cols
    ]
    if not shared:
        raise ValueError("no shared features between the two tables")

    def function_means(dataset: Dataset, col: int) -> np.ndarray | None:
        means = np.empty(functions.size)
        for i, fid in enumerate(functions):
            vals = dataset.matrix[dataset.function_ids == fid, col]
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                return None
            means[i] = vals.mean()
        return means

    results = []
    for name, j_orig, j_red in shared:
        a = function_means(original, j_orig)
        b = function_means(reduced, j_red)
        if a is None or b is None:
            continue
        tau = ml.kendall_tau(a, b)
        if tau is None:
            continue
        results.append((name, tau, int(functions.size)))
    return results
