"""Seeded space-filling designs and the design set D = (X, y).

The initial sample is drawn by Latin hypercube sampling: per dimension the
box edge is split into l equal strata, each stratum receives exactly one
point, and stratum-to-point assignment is an independent seeded permutation
per dimension.  No distance-optimized variant is provided; plain LHS is
cheap at any dimension while improved variants are not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .testbed import Bounds, InstanceDescriptor, evaluate_batch

__all__ = ["DesignSample", "lhs", "build_design", "default_design_size"]


@dataclass(frozen=True)
class DesignSample:
    """An evaluated sample: points (l, n) inside bounds, objectives (l,)."""

    points: np.ndarray
    objectives: np.ndarray
    bounds: Bounds
    seed: int

    def __post_init__(self):
        points = np.ascontiguousarray(self.points, dtype=float)
        objectives = np.asarray(self.objectives, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must be an (l, n) matrix")
        if objectives.shape != (points.shape[0],):
            raise ValueError("objectives must have one value per point")
        if points.shape[0] < 2:
            raise ValueError("a design needs at least 2 points")
        if points.shape[1] != self.bounds.dimension:
            raise ValueError("points and bounds disagree on dimension")
        if (points < self.bounds.lower).any() or (points > self.bounds.upper).any():
            raise ValueError("points fall outside bounds")
        points.setflags(write=False)
        objectives.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "objectives", objectives)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def lhs(l: int, bounds: Bounds, seed: int) -> np.ndarray:
    """Latin hypercube sample of l points inside the box.

    Per dimension, exactly one point falls in each of the l equal-width
    strata; the within-stratum offset is uniform.  Deterministic in seed.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF]))
    n = bounds.dimension
    unit = np.empty((l, n))
    for j in range(n):
        strata = rng.permutation(l)
        unit[:, j] = (strata + rng.random(l)) / l
    return bounds.lower + unit * (bounds.upper - bounds.lower)


def default_design_size(dimension: int) -> int:
    """Default initial sample size: 50 points per dimension."""
    return 50 * dimension


def build_design(instance: InstanceDescriptor, l: int, seed: int) -> DesignSample:
    """Sample l points by LHS and evaluate the instance on them.

    Spends exactly l objective evaluations, all up front; everything
    downstream works from the recorded (points, objectives) pair.
    """
    if l < 2:
        raise ValueError("design size must be >= 2")
    points = lhs(l, instance.bounds, seed)
    objectives = evaluate_batch(instance, points)
    return DesignSample(points, objectives, instance.bounds, seed)
