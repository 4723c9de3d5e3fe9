"""Cell-mapping feature groups over a b^d grid.

The box is discretized into b blocks per dimension (b >= 3).  Features are
derived from per-cell statistics (cm_angle, cm_grad), from sampled collinear
cell triples (cm_conv), and from an absorbing Markov chain between
neighboring cells (gcm).  Reduced samples must be normalized into the unit
box before grid construction; the dispatcher takes care of that.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..errors import check_deadline

__all__ = [
    "CellGrid",
    "CellSummary",
    "build_grid",
    "cm_angle",
    "cm_conv",
    "cm_grad",
    "gcm",
    "compute",
]

DEFAULT_CELL_LIMIT = 1e7
_SCHEMES = ("min", "mean", "near")
_PROB_TOL = 1e-12
_SPSOLVE_LIMIT = 2e4  # direct sparse solve up to here, power iteration beyond


@dataclass(frozen=True)
class CellGrid:
    blocks: int
    dim: int
    bounds: object

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        """Row-major flat cell index per point; upper boundaries right-closed."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        span = self.bounds.upper - self.bounds.lower
        idx = np.floor((points - self.bounds.lower) / span * self.blocks)
        idx = np.clip(idx.astype(np.int64), 0, self.blocks - 1)
        return np.ravel_multi_index(idx.T, (self.blocks,) * self.dim)

    @property
    def total_cells(self) -> float:
        return float(self.blocks) ** self.dim


@dataclass(frozen=True)
class CellSummary:
    """Per non-empty cell aggregates, aligned arrays sorted by flat index."""

    flat: np.ndarray          # (c,) sorted flat cell indices
    counts: np.ndarray        # (c,)
    centers: np.ndarray       # (c, d) geometric cell centers
    members: list             # per cell: sorted point indices
    best_index: np.ndarray    # (c,) point index of the cell's best value
    best_value: np.ndarray
    worst_index: np.ndarray
    worst_value: np.ndarray
    rep_min: np.ndarray
    rep_mean: np.ndarray
    rep_near: np.ndarray      # value of the member closest to the center

    @property
    def n_cells(self) -> int:
        return self.flat.size

    def representatives(self, scheme: str) -> np.ndarray:
        return {"min": self.rep_min, "mean": self.rep_mean, "near": self.rep_near}[scheme]


def build_grid(points, y, b: int, bounds, cell_limit: float = DEFAULT_CELL_LIMIT):
    """Discretize the box and summarize every non-empty cell."""
    if b < 3:
        raise ValueError("need at least 3 blocks per dimension")
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    dim = points.shape[1]
    if dim * np.log(b) > np.log(cell_limit):
        raise ValueError(
            f"grid of {b}^{dim} cells exceeds the cell limit ({cell_limit:g})"
        )
    grid = CellGrid(blocks=b, dim=dim, bounds=bounds)
    ids = grid.cell_of(points)
    order = np.argsort(ids, kind="stable")
    flat, starts = np.unique(ids[order], return_index=True)
    bounds_lo = bounds.lower
    width = (bounds.upper - bounds.lower) / b
    multi = np.array(np.unravel_index(flat, (b,) * dim)).T
    centers = bounds_lo + (multi + 0.5) * width

    n_cells = flat.size
    counts = np.empty(n_cells, dtype=np.int64)
    members = []
    best_index = np.empty(n_cells, dtype=np.int64)
    worst_index = np.empty(n_cells, dtype=np.int64)
    best_value = np.empty(n_cells)
    worst_value = np.empty(n_cells)
    rep_mean = np.empty(n_cells)
    rep_near = np.empty(n_cells)
    stops = np.append(starts[1:], ids.size)
    for c in range(n_cells):
        idx = np.sort(order[starts[c]:stops[c]])
        members.append(idx)
        counts[c] = idx.size
        vals = y[idx]
        best_index[c] = idx[np.argmin(vals)]
        worst_index[c] = idx[np.argmax(vals)]
        best_value[c] = vals.min()
        worst_value[c] = vals.max()
        rep_mean[c] = vals.mean()
        offsets = points[idx] - centers[c]
        nearest = np.argmin(np.einsum("ij,ij->i", offsets, offsets))
        rep_near[c] = y[idx[nearest]]
    summary = CellSummary(
        flat=flat,
        counts=counts,
        centers=centers,
        members=members,
        best_index=best_index,
        best_value=best_value,
        worst_index=worst_index,
        worst_value=worst_value,
        rep_min=best_value.copy(),
        rep_mean=rep_mean,
        rep_near=rep_near,
    )
    return grid, summary


def _sd(values) -> float | None:
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1)) if values.size >= 2 else None


def _stats(values, with_sum: bool) -> list:
    values = np.asarray(values, dtype=float)
    out = [
        float(values.min()),
        float(values.mean()),
        float(np.median(values)),
        float(values.max()),
        _sd(values),
    ]
    if with_sum:
        out.append(float(values.sum()))
    return out


# -- cm_angle -----------------------------------------------------------------

def cm_angle(grid: CellGrid, summary: CellSummary, points, y) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    to_best = points[summary.best_index] - summary.centers
    to_worst = points[summary.worst_index] - summary.centers
    dist_best = np.linalg.norm(to_best, axis=1)
    dist_worst = np.linalg.norm(to_worst, axis=1)
    defined = (dist_best > 0) & (dist_worst > 0)
    angles = None
    if defined.any():
        cosine = np.einsum("ij,ij->i", to_best[defined], to_worst[defined])
        cosine /= dist_best[defined] * dist_worst[defined]
        angles = np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0)))
    y_span = float(y.max() - y.min())
    cell_span = summary.worst_value - summary.best_value
    ratios = np.where(cell_span == 0.0, 0.0, cell_span / (y_span if y_span > 0 else 1.0))
    return [
        ("dist_ctr2best.mean", float(dist_best.mean())),
        ("dist_ctr2best.sd", _sd(dist_best)),
        ("dist_ctr2worst.mean", float(dist_worst.mean())),
        ("dist_ctr2worst.sd", _sd(dist_worst)),
        ("angle.mean", float(angles.mean()) if angles is not None else None),
        ("angle.sd", _sd(angles) if angles is not None else None),
        ("y_ratio_best2worst.mean", float(ratios.mean())),
        ("y_ratio_best2worst.sd", _sd(ratios)),
    ]


# -- neighbors ----------------------------------------------------------------

def _neighbor_table(grid: CellGrid, summary: CellSummary) -> np.ndarray:
    """(c, 2d) table of neighbor cell positions, -1 where absent or empty."""
    b, d = grid.blocks, grid.dim
    flat = summary.flat
    multi = np.array(np.unravel_index(flat, (b,) * d)).T
    table = np.full((flat.size, 2 * d), -1, dtype=np.int64)
    col = 0
    for axis in range(d):
        for step in (-1, 1):
            cand = multi.copy()
            cand[:, axis] += step
            legal = (cand[:, axis] >= 0) & (cand[:, axis] < b)
            if legal.any():
                cand_flat = np.ravel_multi_index(cand[legal].T, (b,) * d)
                pos = np.searchsorted(flat, cand_flat)
                pos = np.clip(pos, 0, flat.size - 1)
                found = flat[pos] == cand_flat
                rows = np.flatnonzero(legal)[found]
                table[rows, col] = pos[found]
            col += 1
    return table


# -- cm_conv ------------------------------------------------------------------

def cm_conv(grid: CellGrid, summary: CellSummary, seed: int, samples: int = 1000) -> list:
    names = ["convex.hard", "convex.soft", "concave.hard", "concave.soft"]
    table = _neighbor_table(grid, summary)
    d = grid.dim
    triples = []
    for axis in range(d):
        lo, hi = table[:, 2 * axis], table[:, 2 * axis + 1]
        ok = np.flatnonzero((lo >= 0) & (hi >= 0))
        triples += [(lo[c], c, hi[c]) for c in ok]
    if not triples:
        return [(name, None) for name in names]
    triples = np.asarray(triples)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 29]))
    picks = triples[rng.integers(0, len(triples), size=samples)]
    rep = summary.representatives("near")
    f1, f2, f3 = rep[picks[:, 0]], rep[picks[:, 1]], rep[picks[:, 2]]
    pair_min = np.minimum(f1, f3)
    pair_max = np.maximum(f1, f3)
    midpoint = (f1 + f3) / 2.0
    return [
        ("convex.hard", float(np.mean(f2 < pair_min))),
        ("convex.soft", float(np.mean(f2 < midpoint))),
        ("concave.hard", float(np.mean(f2 > pair_max))),
        ("concave.soft", float(np.mean(f2 > midpoint))),
    ]


# -- cm_grad ------------------------------------------------------------------

def cm_grad(grid: CellGrid, summary: CellSummary, points, y) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    homogeneity = []
    for members in summary.members:
        if members.size < 2:
            continue
        sub = points[members]
        diff = sub[:, None, :] - sub[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(dist, np.inf)
        nn = dist.argmin(axis=1)
        vectors = []
        for a in range(members.size):
            j = nn[a]
            d = dist[a, j]
            if not np.isfinite(d) or d == 0.0:
                continue
            pi, pj = members[a], members[j]
            ya, yj = y[pi], y[pj]
            if yj < ya or (yj == ya and pj < pi):
                vec = (sub[j] - sub[a]) / d  # worse -> better (tie: toward lower index)
            else:
                vec = (sub[a] - sub[j]) / d
            vectors.append(vec)
        if vectors:
            vectors = np.asarray(vectors)
            homogeneity.append(
                float(np.linalg.norm(vectors.sum(axis=0)) / vectors.shape[0])
            )
    if not homogeneity:
        return [("mean", None), ("sd", None)]
    return [("mean", float(np.mean(homogeneity))), ("sd", _sd(homogeneity))]


# -- gcm ----------------------------------------------------------------------

def _absorption(n_cells, better_lists, attractors, transient, deadline=None):
    """Absorption probabilities of the uniform better-neighbor chain.

    Returns a dense (len(transient), len(attractors)) matrix.  Direct sparse
    solve up to 2e4 cells, power iteration to 1e-12 beyond.
    """
    attr_pos = {int(a): k for k, a in enumerate(attractors)}
    trans_pos = {int(t): k for k, t in enumerate(transient)}
    nt, na = len(transient), len(attractors)
    if nt == 0:
        return np.zeros((0, na))
    q_rows, q_cols, q_vals = [], [], []
    r_rows, r_cols, r_vals = [], [], []
    for t in transient:
        row = trans_pos[int(t)]
        targets = better_lists[t]
        p = 1.0 / targets.size
        for tgt in targets:
            tgt = int(tgt)
            if tgt in attr_pos:
                r_rows.append(row)
                r_cols.append(attr_pos[tgt])
                r_vals.append(p)
            else:
                q_rows.append(row)
                q_cols.append(trans_pos[tgt])
                q_vals.append(p)
    q = sparse.csr_matrix((q_vals, (q_rows, q_cols)), shape=(nt, nt))
    r = sparse.csr_matrix((r_vals, (r_rows, r_cols)), shape=(nt, na))
    if n_cells <= _SPSOLVE_LIMIT:
        system = sparse.identity(nt, format="csr") - q
        solution = spsolve(system.tocsc(), r.tocsc())
        b = np.asarray(
            solution.todense() if sparse.issparse(solution) else solution
        ).reshape(nt, na)
        return b
    b = np.zeros((nt, na))
    r_dense = np.asarray(r.todense())
    for _ in range(1000000):
        check_deadline(deadline)
        nxt = q @ b + r_dense
        delta = np.abs(nxt - b).max()
        b = nxt
        if delta <= 1e-12:
            break
    return b


def _gcm_scheme(summary: CellSummary, table: np.ndarray, scheme: str, deadline) -> list:
    start = time.perf_counter()
    rep = summary.representatives(scheme)
    n_cells = summary.n_cells
    better_lists = []
    for c in range(n_cells):
        neigh = table[c]
        neigh = neigh[neigh >= 0]
        better_lists.append(neigh[rep[neigh] < rep[c]])
    is_attractor = np.array([lst.size == 0 for lst in better_lists])
    attractors = np.flatnonzero(is_attractor)
    transient = np.flatnonzero(~is_attractor)
    b = _absorption(n_cells, better_lists, attractors, transient, deadline)
    uncertain = (b > _PROB_TOL).sum(axis=1) >= 2 if transient.size else np.zeros(0, bool)

    certain_counts = np.ones(attractors.size)
    uncertain_counts = np.ones(attractors.size)
    prob_mass = np.ones(attractors.size)
    if transient.size:
        certain_counts += (b >= 1.0 - _PROB_TOL).sum(axis=0)
        uncertain_counts += (b > _PROB_TOL).sum(axis=0)
        prob_mass += b.sum(axis=0)
    certain_frac = certain_counts / n_cells
    uncertain_frac = uncertain_counts / n_cells
    prob_frac = prob_mass / n_cells

    best_rep = rep[attractors].min()
    best_sel = rep[attractors] == best_rep
    elapsed = time.perf_counter() - start

    entries = [
        ("attractors", float(attractors.size)),
        ("pcells", attractors.size / n_cells),
        ("tcells", transient.size / n_cells),
        ("uncells", float(uncertain.sum()) / n_cells),
    ]
    for label, vals, with_sum in (
        ("basin_certain", certain_frac, True),
        ("basin_uncertain", uncertain_frac, True),
        ("basin_prob", prob_frac, False),
    ):
        stats = _stats(vals, with_sum)
        keys = ["min", "mean", "median", "max", "sd"] + (["sum"] if with_sum else [])
        entries += [(f"{label}.{key}", val) for key, val in zip(keys, stats)]
    entries += [
        ("best_attr.prob", float(prob_frac[best_sel].sum())),
        ("best_attr.no", float(best_sel.sum())),
        ("costs_fun_evals", 0.0),
        ("costs_runtime", elapsed),
    ]
    return [(f"{scheme}.{name}", value) for name, value in entries]


def gcm(grid: CellGrid, summary: CellSummary, deadline=None) -> list:
    if summary.n_cells == 0:
        raise ValueError("gcm needs at least one non-empty cell")
    table = _neighbor_table(grid, summary)
    entries = []
    for scheme in _SCHEMES:
        check_deadline(deadline)
        entries += _gcm_scheme(summary, table, scheme, deadline)
    return entries


def compute(group: str, points, y, bounds, config) -> list:
    """Adapter used by the dispatcher: builds the grid, runs one group."""
    grid, summary = build_grid(points, y, config.blocks, bounds, config.cell_limit)
    if group == "cm_angle":
        return cm_angle(grid, summary, points, y)
    if group == "cm_conv":
        return cm_conv(grid, summary, config.seed, config.cm_conv_samples)
    if group == "cm_grad":
        return cm_grad(grid, summary, points, y)
    if group == "gcm":
        return gcm(grid, summary, config.deadline)
    raise ValueError(f"unknown cell-mapping group {group!r}")
