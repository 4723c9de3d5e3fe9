"""Landscape feature groups computed from a sampled design.

``compute_group`` is the single entry point: it accepts a DesignSample or a
ReducedSample, routes to the core or cell-mapping implementation, measures
the wall time of the computation alone, and prefixes every feature name
with ``d_`` when the input is a reduced sample.

Degenerate feature values are reported as None (the undefined marker), not
dropped; non-finite values are mapped to None as well so downstream CSVs
stay clean.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..dimred import ReducedSample, normalize_unit_box
from ..errors import BudgetExceededError, check_deadline
from ..sampling import DesignSample
from ..testbed import Bounds

__all__ = [
    "FeatureVector",
    "FeatureConfig",
    "compute_group",
    "compute_groups",
    "CORE_GROUPS",
    "CELLMAP_GROUPS",
    "ALL_GROUPS",
    "BudgetExceededError",
]

CORE_GROUPS = (
    "ela_distr",
    "ela_level",
    "ela_meta",
    "nbc",
    "disp",
    "ic",
    "basic",
    "limo",
    "pca",
)
CELLMAP_GROUPS = ("cm_angle", "cm_conv", "cm_grad", "gcm")
ALL_GROUPS = CORE_GROUPS + CELLMAP_GROUPS

#: Groups that interpret points through a cell grid and therefore need the
#: reduced sample normalized into the unit box first.
_GRID_GROUPS = CELLMAP_GROUPS + ("basic", "limo")


@dataclass(frozen=True)
class FeatureVector:
    """Ordered (name, value) pairs plus the computation cost bookkeeping.

    ``None`` values mark undefined entries.  cost_seconds duplicates the
    group's costs_runtime entry; cost_evals counts extra objective
    evaluations, which is always 0 for every group here.
    """

    entries: tuple
    cost_evals: int
    cost_seconds: float

    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def values(self) -> list:
        return [value for _, value in self.entries]

    def as_dict(self) -> dict:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class FeatureConfig:
    """Tunable parameters shared by the feature groups."""

    seed: int = 0
    blocks: int = 3
    cell_limit: float = 1e7
    level_quantiles: tuple = (0.10, 0.25, 0.50)
    disp_quantiles: tuple = (0.02, 0.05, 0.10, 0.25)
    cm_conv_samples: int = 1000
    folds: int = 10
    limo_cell_cap: float = 1e5
    deadline: float | None = None  # absolute perf_counter() timestamp


def _clean(value):
    """Map non-finite or missing values to the undefined marker."""
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def compute_group(group: str, data, config: FeatureConfig | None = None) -> FeatureVector:
    """Compute one feature group on a design or reduced sample.

    Returns a FeatureVector whose names carry the group prefix (and a
    ``d_`` prefix for reduced inputs).  cost_seconds covers the feature
    computation only, not the sampling or the reduction.
    """
    from . import cellmap, core

    if group not in ALL_GROUPS:
        raise ValueError(f"unknown feature group {group!r}")
    if config is None:
        config = FeatureConfig()
    if isinstance(data, ReducedSample):
        reduced = True
        points, y = data.points, data.objectives
    elif isinstance(data, DesignSample):
        reduced = False
        points, y = data.points, data.objectives
    else:
        raise TypeError("data must be a DesignSample or ReducedSample")

    start = time.perf_counter()
    if group in _GRID_GROUPS:
        if reduced:
            grid_points = normalize_unit_box(points)
            bounds = Bounds(np.zeros(points.shape[1]), np.ones(points.shape[1]))
        else:
            grid_points = points
            bounds = data.bounds
        if group == "basic":
            entries = core.basic(grid_points, y, bounds, config)
        elif group == "limo":
            entries = core.limo(grid_points, y, bounds, config)
        else:
            entries = cellmap.compute(group, grid_points, y, bounds, config)
    elif group == "ela_distr":
        entries = core.ela_distr(y, config)
    elif group == "ela_level":
        entries = core.ela_level(points, y, config)
    elif group == "ela_meta":
        entries = core.ela_meta(points, y, config)
    elif group == "nbc":
        entries = core.nbc(points, y, config)
    elif group == "disp":
        entries = core.disp(points, y, config)
    elif group == "ic":
        entries = core.ic(points, y, config)
    else:  # pca
        entries = core.pca_features(points, y, config)
    elapsed = time.perf_counter() - start

    named = [(f"{group}.{suffix}", _clean(value)) for suffix, value in entries]
    if group != "gcm":  # gcm carries per-scheme cost entries instead
        named.append((f"{group}.costs_fun_evals", 0.0))
        named.append((f"{group}.costs_runtime", elapsed))
    if reduced:
        named = [(f"d_{name}", value) for name, value in named]
    return FeatureVector(
        entries=tuple(named), cost_evals=0, cost_seconds=elapsed
    )


def compute_groups(groups, data, config: FeatureConfig | None = None) -> list[FeatureVector]:
    """Compute several groups on the same input, in the order given."""
    return [compute_group(group, data, config) for group in groups]
