"""Rank-weighted linear dimensionality reduction of a design sample.

Solutions are ranked by objective value (rank 1 = best).  Each point is
re-scaled around the sample mean by its normalized rank weight,

    w~_i = ln l - ln r_i,    w_i = w~_i / sum_j w~_j,
    xbar_i = w_i * (x_i - mean(X)),

so that good points keep their offset from the mean while bad points
collapse toward zero.  PCA on the re-scaled set then picks the m directions
along which the good points spread the most, and the reduced sample is the
projection of the re-scaled points onto those axes.  Objective values are
carried over untouched; the reduction costs no extra evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import DesignSample

__all__ = [
    "RankWeights",
    "ReductionTransform",
    "ReducedSample",
    "rank_objectives",
    "compute_weights",
    "reduce",
    "normalize_unit_box",
    "DEFAULT_REDUCED_DIMENSION",
]

DEFAULT_REDUCED_DIMENSION = 2


@dataclass(frozen=True)
class RankWeights:
    ranks: np.ndarray        # permutation of 1..l, 1 = best objective
    raw_weights: np.ndarray  # ln l - ln rank, 0 for the worst point
    weights: np.ndarray      # raw weights normalized to sum 1


@dataclass(frozen=True)
class ReductionTransform:
    mean: np.ndarray                 # (n,) sample mean of the source points
    weights: RankWeights
    axes: np.ndarray                 # (n, m), orthonormal columns
    explained_variance: np.ndarray   # (m,), non-increasing


@dataclass(frozen=True)
class ReducedSample:
    points: np.ndarray       # (l, m)
    objectives: np.ndarray   # bit-identical to the source design's
    transform: ReductionTransform
    m: int

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.m


def rank_objectives(y: np.ndarray) -> np.ndarray:
    """Rank objective values ascending, rank 1 = smallest, stable ties."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need a vector of at least 2 objective values")
    if not np.isfinite(y).all():
        raise ValueError("objective values must be finite")
    order = np.argsort(y, kind="stable")
    ranks = np.empty(y.size, dtype=np.int64)
    ranks[order] = np.arange(1, y.size + 1)
    return ranks


def compute_weights(l: int, ranks: np.ndarray) -> RankWeights:
    """Logarithmic rank weights, normalized to sum 1."""
    if l < 2:
        raise ValueError("weights are undefined for l < 2")
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.shape != (l,) or not np.array_equal(np.sort(ranks), np.arange(1, l + 1)):
        raise ValueError("ranks must be a permutation of 1..l")
    raw = np.log(l) - np.log(ranks)
    weights = raw / raw.sum()
    return RankWeights(ranks=ranks, raw_weights=raw, weights=weights)


def _weighted_pca_axes(xbar: np.ndarray, m: int):
    """Top-m orthonormal eigenvectors and eigenvalues of cov(xbar).

    Uses the n x n covariance when n <= l, otherwise the l x l Gram matrix
    (same nonzero spectrum) so the eigensolve costs O(min(n, l)^3).
    """
    l, n = xbar.shape
    centered = xbar - xbar.mean(axis=0)
    if n <= l:
        cov = centered.T @ centered / (l - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals, kind="stable")[::-1]
        return eigvecs[:, order[:m]], np.maximum(eigvals[order[:m]], 0.0)
    gram = centered @ centered.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    tol = max(eigvals[0], 1.0) * l * np.finfo(float).eps
    axes = np.zeros((n, m))
    filled = 0
    for k in range(min(m, l)):
        if eigvals[k] <= tol:
            break
        axes[:, filled] = centered.T @ eigvecs[:, k] / np.sqrt(eigvals[k])
        filled += 1
    # rank-deficient case: pad with any orthonormal completion so the axes
    # stay a valid orthonormal frame (projections onto the padding are ~0)
    basis_idx = 0
    while filled < m and basis_idx < n:
        cand = np.zeros(n)
        cand[basis_idx] = 1.0
        basis_idx += 1
        cand -= axes[:, :filled] @ (axes[:, :filled].T @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-8:
            axes[:, filled] = cand / norm
            filled += 1
    values = np.zeros(m)
    nonzero = min(m, np.count_nonzero(eigvals > tol))
    values[:nonzero] = eigvals[:nonzero] / (l - 1)
    return axes, values


def reduce(design: DesignSample, m: int) -> ReducedSample:
    """Map an (l, n) design to (l, m) with m < n via rank-weighted PCA."""
    l, n = design.points.shape
    if m < 1:
        raise ValueError("m must be >= 1")
    if m >= n:
        raise ValueError(f"m must be smaller than the source dimension ({m} >= {n})")
    ranks = rank_objectives(design.objectives)
    rank_weights = compute_weights(l, ranks)
    mean = design.points.mean(axis=0)
    xbar = rank_weights.weights[:, None] * (design.points - mean)
    axes, explained = _weighted_pca_axes(xbar, m)
    # fix each axis sign so its largest-magnitude entry is positive
    flip = axes[np.abs(axes).argmax(axis=0), np.arange(m)] < 0
    axes[:, flip] *= -1.0
    points_out = xbar @ axes
    axes.setflags(write=False)
    points_out.setflags(write=False)
    transform = ReductionTransform(
        mean=mean, weights=rank_weights, axes=axes, explained_variance=explained
    )
    return ReducedSample(
        points=points_out, objectives=design.objectives, transform=transform, m=m
    )


def normalize_unit_box(points: np.ndarray) -> np.ndarray:
    """Affine per-column map onto [0, 1]; zero-range columns go to 0.5."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need an (l, m) matrix with l >= 2")
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    out = np.empty_like(points)
    flat = span == 0.0
    out[:, flat] = 0.5
    out[:, ~flat] = (points[:, ~flat] - lo[~flat]) / span[~flat]
    return out
