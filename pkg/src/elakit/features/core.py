"""The nine non-cell-mapping feature groups.

Each function returns an ordered list of (suffix, value) pairs without the
group prefix and without the trailing cost entries; the dispatcher in
``features`` adds both.  Undefined values are None.
"""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist, pdist

from .. import ml
from ..errors import check_deadline

__all__ = [
    "ela_distr",
    "ela_level",
    "ela_meta",
    "nbc",
    "disp",
    "ic",
    "basic",
    "limo",
    "pca_features",
]


def _sd(values) -> float | None:
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1)) if values.size >= 2 else None


def _pearson(a, b) -> float | None:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.std(a) == 0.0 or np.std(b) == 0.0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


# -- ela_distr ----------------------------------------------------------------

_KDE_GRID = 512
_PEAK_MASS = 0.1


def _density_peaks(y: np.ndarray) -> int:
    """Modes of a Gaussian KDE after merging low-mass regions.

    Regions split at the density minima between adjacent local maxima; any
    region carrying less than 10% of the total mass is merged into its
    larger neighbor.
    """
    kde = stats.gaussian_kde(y, bw_method="silverman")
    bandwidth = float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(y.min() - 3 * bandwidth, y.max() + 3 * bandwidth, _KDE_GRID)
    dens = kde(grid)
    interior = np.flatnonzero(
        (dens[1:-1] > dens[:-2]) & (dens[1:-1] >= dens[2:])
    ) + 1
    maxima = list(interior)
    if dens[0] > dens[1]:
        maxima.insert(0, 0)
    if dens[-1] > dens[-2]:
        maxima.append(_KDE_GRID - 1)
    if len(maxima) <= 1:
        return 1
    cuts = [0]
    for left, right in zip(maxima[:-1], maxima[1:]):
        cuts.append(left + int(np.argmin(dens[left:right + 1])))
    cuts.append(_KDE_GRID)
    masses = [float(dens[a:b].sum()) for a, b in zip(cuts[:-1], cuts[1:])]
    total = sum(masses)
    masses = [m / total for m in masses]
    while len(masses) > 1 and min(masses) < _PEAK_MASS:
        i = int(np.argmin(masses))
        if i == 0:
            j = 1
        elif i == len(masses) - 1:
            j = i - 1
        else:
            j = i - 1 if masses[i - 1] >= masses[i + 1] else i + 1
        keep = min(i, j)
        masses[keep] = masses[i] + masses[j]
        del masses[max(i, j)]
    return len(masses)


def ela_distr(y: np.ndarray, config) -> list:
    y = np.asarray(y, dtype=float)
    if y.size < 4:
        raise ValueError("ela_distr needs at least 4 observations")
    if np.all(y == y[0]):
        return [("skewness", None), ("kurtosis", None), ("number_of_peaks", 1.0)]
    return [
        ("skewness", float(stats.skew(y, bias=False))),
        ("kurtosis", float(stats.kurtosis(y, bias=False))),
        ("number_of_peaks", float(_density_peaks(y))),
    ]


# -- ela_level ----------------------------------------------------------------

def _safe_ratio(num, den) -> float | None:
    if num is None or den is None or den == 0.0:
        return None
    return num / den


def ela_level(points: np.ndarray, y: np.ndarray, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 40:
        raise ValueError("ela_level needs at least 40 observations")
    entries = []
    for q in config.level_quantiles:
        check_deadline(config.deadline)
        tag = str(int(round(q * 100)))
        labels = y <= np.quantile(y, q)
        if labels.all() or not labels.any():
            block = [None] * 6
        else:
            mmce = ml.lda_qda_mda_mmce(
                points,
                labels,
                folds=config.folds,
                seed=config.seed * 997 + int(round(q * 100)),
                deadline=config.deadline,
            )
            block = [
                mmce[0],
                mmce[1],
                mmce[2],
                _safe_ratio(mmce[0], mmce[1]),
                _safe_ratio(mmce[0], mmce[2]),
                _safe_ratio(mmce[1], mmce[2]),
            ]
        entries += [
            (f"mmce_lda_{tag}", block[0]),
            (f"mmce_qda_{tag}", block[1]),
            (f"mmce_mda_{tag}", block[2]),
            (f"lda_qda_{tag}", block[3]),
            (f"lda_mda_{tag}", block[4]),
            (f"qda_mda_{tag}", block[5]),
        ]
    return entries


# -- ela_meta -----------------------------------------------------------------

def _interaction_columns(x: np.ndarray) -> np.ndarray:
    ii, jj = np.triu_indices(x.shape[1], k=1)
    return x[:, ii] * x[:, jj]


def _full_model_adj_r2(x, y, with_squares: bool, deadline) -> float | None:
    """adj R^2 of the interaction model; skipped when l - p - 1 <= 0.

    The skip is not just an optimization: with p >= l - 1 the adjustment
    denominator is nonpositive, so the value is the undefined marker no
    matter what a minimum-norm fit would say.
    """
    l, n = x.shape
    p = n + n * (n - 1) // 2 + (n if with_squares else 0)
    if l - p - 1 <= 0:
        return None
    check_deadline(deadline)
    blocks = [x]
    if with_squares:
        blocks.append(x * x)
    blocks.append(_interaction_columns(x))
    fit = ml.ols_fit(np.hstack(blocks), y)
    return fit.adj_r2


def ela_meta(points: np.ndarray, y: np.ndarray, config) -> list:
    x = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l, n = x.shape
    if l < n + 2:
        raise ValueError("ela_meta needs at least dim + 2 observations")
    lin = ml.ols_fit(x, y)
    lin_abs = np.abs(lin.coefficients[1:])
    coef_min = float(lin_abs.min())
    coef_max = float(lin_abs.max())
    check_deadline(config.deadline)
    quad = ml.ols_fit(np.hstack([x, x * x]), y)
    quad_abs = np.abs(quad.coefficients[1 + n:])
    quad_min = float(quad_abs.min())
    return [
        ("lin_simple.adj_r2", lin.adj_r2),
        ("lin_simple.intercept", float(lin.coefficients[0])),
        ("lin_simple.coef.min", coef_min),
        ("lin_simple.coef.max", coef_max),
        ("lin_simple.coef.max_by_min", coef_max / coef_min if coef_min > 0 else None),
        ("lin_w_interact.adj_r2", _full_model_adj_r2(x, y, False, config.deadline)),
        ("quad_simple.adj_r2", quad.adj_r2),
        ("quad_simple.cond", float(quad_abs.max()) / quad_min if quad_min > 0 else None),
        ("quad_w_interact.adj_r2", _full_model_adj_r2(x, y, True, config.deadline)),
    ]


# -- nbc ----------------------------------------------------------------------

def _nearest_better(points, y, deadline):
    """nn/nb distances and the nearest-better target per point.

    nb(i) is the distance to the closest strictly better point; a point
    without any strictly better point (the best, including ties) instead
    records its farthest other point, both as distance and as edge target.
    """
    l = points.shape[0]
    nn_dist = np.empty(l)
    nb_dist = np.empty(l)
    nb_target = np.empty(l, dtype=np.int64)
    chunk = max(16, int(2e7) // max(l, 1))
    for start in range(0, l, chunk):
        check_deadline(deadline)
        stop = min(start + chunk, l)
        d = cdist(points[start:stop], points)
        rows = np.arange(stop - start)
        d[rows, start + rows] = np.inf
        nn_dist[start:stop] = d.min(axis=1)
        better = y[None, :] < y[start:stop, None]
        masked = np.where(better, d, np.inf)
        best = masked.min(axis=1)
        has_better = np.isfinite(best)
        arg_better = masked.argmin(axis=1)
        d[rows, start + rows] = -np.inf
        arg_far = d.argmax(axis=1)
        far = d[rows, arg_far]
        nb_dist[start:stop] = np.where(has_better, best, far)
        nb_target[start:stop] = np.where(has_better, arg_better, arg_far)
    return nn_dist, nb_dist, nb_target


def nbc(points: np.ndarray, y: np.ndarray, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l = points.shape[0]
    if l < 5:
        raise ValueError("nbc needs at least 5 points")
    names = [
        "nn_nb.sd_ratio",
        "nn_nb.mean_ratio",
        "nn_nb.cor",
        "dist_ratio.coeff_var",
        "nb_fitness.cor",
    ]
    if np.all(y == y[0]):
        return [(name, None) for name in names]
    nn_dist, nb_dist, nb_target = _nearest_better(points, y, config.deadline)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = nn_dist / nb_dist
    indegree = np.bincount(nb_target, minlength=l).astype(float)
    sd_nb = np.std(nb_dist, ddof=1)
    mean_nb = nb_dist.mean()
    return [
        ("nn_nb.sd_ratio", np.std(nn_dist, ddof=1) / sd_nb if sd_nb > 0 else None),
        ("nn_nb.mean_ratio", nn_dist.mean() / mean_nb if mean_nb > 0 else None),
        ("nn_nb.cor", _pearson(nn_dist, nb_dist)),
        (
            "dist_ratio.coeff_var",
            np.std(ratio, ddof=1) / ratio.mean() if ratio.mean() != 0 else None,
        ),
        ("nb_fitness.cor", _pearson(y, indegree)),
    ]


# -- disp ---------------------------------------------------------------------

def disp(points: np.ndarray, y: np.ndarray, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l = points.shape[0]
    quantiles = config.disp_quantiles
    check_deadline(config.deadline)
    full = pdist(points)
    full_mean = full.mean()
    full_median = float(np.median(full))
    order = np.argsort(y, kind="stable")
    per_q = {}
    for q in quantiles:
        check_deadline(config.deadline)
        k = int(np.ceil(q * l))
        if k < 2:
            per_q[q] = (None, None, None, None)
            continue
        sub = pdist(points[order[:k]])
        sub_mean = sub.mean()
        sub_median = float(np.median(sub))
        per_q[q] = (
            sub_mean / full_mean if full_mean > 0 else None,
            sub_median / full_median if full_median > 0 else None,
            sub_mean - full_mean,
            sub_median - full_median,
        )
    tags = [f"{int(round(q * 100)):02d}" for q in quantiles]
    entries = []
    for slot, stat in enumerate(("ratio_mean", "ratio_median", "diff_mean", "diff_median")):
        for q, tag in zip(quantiles, tags):
            entries.append((f"{stat}_{tag}", per_q[q][slot]))
    return entries


# -- ic -----------------------------------------------------------------------

_IC_GRID_SIZE = 1000
_IC_SETTLE = 0.05
_IC_RATIO = 0.5


def _nn_tour(points: np.ndarray, seed: int, deadline) -> np.ndarray:
    """Greedy nearest-neighbor point order from a seeded start."""
    l = points.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 17]))
    order = np.empty(l, dtype=np.int64)
    order[0] = int(rng.integers(l))
    sq = np.einsum("ij,ij->i", points, points)
    remaining_dist = np.full(l, np.inf)
    visited = np.zeros(l, dtype=bool)
    visited[order[0]] = True
    cur = order[0]
    for step in range(1, l):
        if step % 512 == 0:
            check_deadline(deadline)
        d2 = sq - 2.0 * (points @ points[cur]) + sq[cur]
        d2[visited] = np.inf
        cur = int(np.argmin(d2))
        order[step] = cur
        visited[cur] = True
    return order


def ic(points: np.ndarray, y: np.ndarray, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l = points.shape[0]
    if l < 10:
        raise ValueError("ic needs at least 10 points")
    order = _nn_tour(points, config.seed, config.deadline)
    steps = np.diff(points[order], axis=0)
    lengths = np.sqrt(np.einsum("ij,ij->i", steps, steps))
    dy = np.diff(y[order])
    keep = lengths > 0.0
    ratios = dy[keep] / lengths[keep]
    if ratios.size < 2:
        return [("h.max", None), ("eps.s", None), ("eps.max", None),
                ("eps.ratio", None), ("m0", None)]
    scale = float(np.abs(ratios).max())
    base = np.logspace(-5.0, 15.0, _IC_GRID_SIZE)
    grid = np.concatenate([[0.0], base * (scale if scale > 0 else 1.0)])
    check_deadline(config.deadline)
    # symbols[e, i] in {-1, 0, 1}: slope below -eps, within, above +eps
    above = ratios[None, :] > grid[:, None]
    below = ratios[None, :] < -grid[:, None]
    symbols = above.astype(np.int8) - below.astype(np.int8)
    a, b = symbols[:, :-1], symbols[:, 1:]
    n_pairs = a.shape[1]
    entropy = np.zeros(grid.size)
    if n_pairs > 0:
        pair_code = (a + 1) * 3 + (b + 1)
        for code in (1, 2, 3, 5, 6, 7):  # the six a != b combinations
            counts = (pair_code == code).sum(axis=1)
            prob = counts / n_pairs
            mask = prob > 0
            entropy[mask] -= prob[mask] * (np.log(prob[mask]) / np.log(6.0))
    changed = np.ones_like(symbols, dtype=bool)
    changed[:, 1:] = symbols[:, 1:] != symbols[:, :-1]
    m_curve = ((symbols != 0) & changed).sum(axis=1) / (l - 1)
    m0 = float(m_curve[0])

    h_max = float(entropy.max())
    positive = grid > 0.0
    settled = positive & (entropy < _IC_SETTLE)
    eps_s = float(np.log10(grid[settled].min())) if settled.any() else None
    arg = int(np.argmax(entropy))
    eps_max = float(np.log10(grid[arg])) if grid[arg] > 0 else None
    if m0 > 0:
        ratio_ok = positive & (m_curve <= _IC_RATIO * m0)
        eps_ratio = float(np.log10(grid[ratio_ok].min())) if ratio_ok.any() else None
    else:
        eps_ratio = None
    return [
        ("h.max", h_max),
        ("eps.s", eps_s),
        ("eps.max", eps_max),
        ("eps.ratio", eps_ratio),
        ("m0", m0),
    ]


# -- basic --------------------------------------------------------------------

def _block_index(points, bounds, blocks: int) -> np.ndarray:
    span = bounds.upper - bounds.lower
    idx = np.floor((points - bounds.lower) / span * blocks).astype(np.int64)
    return np.clip(idx, 0, blocks - 1)


def basic(points: np.ndarray, y: np.ndarray, bounds, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l, dim = points.shape
    blocks = config.blocks
    # the filled-cell count works on block index rows directly, so it stays
    # cheap even where an explicit b^dim grid would be impossibly large
    filled = np.unique(_block_index(points, bounds, blocks), axis=0).shape[0]
    return [
        ("dim", float(dim)),
        ("observations", float(l)),
        ("lower_min", float(bounds.lower.min())),
        ("lower_max", float(bounds.lower.max())),
        ("upper_min", float(bounds.upper.min())),
        ("upper_max", float(bounds.upper.max())),
        ("objective_min", float(y.min())),
        ("objective_max", float(y.max())),
        ("blocks_min", float(blocks)),
        ("blocks_max", float(blocks)),
        ("cells_total", float(blocks) ** dim),
        ("cells_filled", float(filled)),
        ("minimize_fun", 1.0),
    ]


# -- limo ---------------------------------------------------------------------

def limo(points: np.ndarray, y: np.ndarray, bounds, config) -> list:
    points = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    l, dim = points.shape
    names = [
        "avg_length.reg", "avg_length.norm", "length.mean", "length.sd",
        "cor.reg", "cor.norm", "ratio.mean", "ratio.sd",
        "sd_ratio.reg", "sd_ratio.norm", "sd_mean.reg", "sd_mean.norm",
    ]
    if float(config.blocks) ** dim <= config.limo_cell_cap:
        cell_ids = np.ravel_multi_index(
            _block_index(points, bounds, config.blocks).T, (config.blocks,) * dim
        )
    else:
        cell_ids = np.zeros(l, dtype=np.int64)  # grid infeasible: one global cell
    coefs = []
    for cell in np.unique(cell_ids):
        members = np.flatnonzero(cell_ids == cell)
        if members.size < dim + 2:
            continue
        check_deadline(config.deadline)
        fit = ml.ols_fit(points[members], y[members])
        coefs.append(fit.coefficients[1:])
    if not coefs:
        return [(name, None) for name in names]
    coefs = np.asarray(coefs)
    norms = np.sqrt(np.einsum("ij,ij->i", coefs, coefs))
    normed = np.zeros_like(coefs)
    nonzero = norms > 0
    normed[nonzero] = coefs[nonzero] / norms[nonzero, None]
    n_cells = coefs.shape[0]

    def mean_pair_cor(mat):
        if n_cells < 2:
            return None
        cor = np.corrcoef(mat)
        iu = np.triu_indices(n_cells, k=1)
        return float(np.mean(cor[iu]))

    with np.errstate(divide="ignore", invalid="ignore"):
        mags = np.abs(coefs)
        ratios = mags.max(axis=1) / mags.min(axis=1)
    per_coord_sd = coefs.std(axis=0, ddof=1) if n_cells >= 2 else None
    per_coord_sd_norm = normed.std(axis=0, ddof=1) if n_cells >= 2 else None

    def sd_ratio(sds):
        if sds is None:
            return None
        low = sds.min()
        return float(sds.max() / low) if low > 0 else None

    return [
        ("avg_length.reg", float(np.linalg.norm(coefs.mean(axis=0)))),
        ("avg_length.norm", float(np.linalg.norm(normed.mean(axis=0)))),
        ("length.mean", float(norms.mean())),
        ("length.sd", _sd(norms)),
        ("cor.reg", mean_pair_cor(coefs)),
        ("cor.norm", mean_pair_cor(normed)),
        ("ratio.mean", float(ratios.mean())),
        ("ratio.sd", _sd(ratios)),
        ("sd_ratio.reg", sd_ratio(per_coord_sd)),
        ("sd_ratio.norm", sd_ratio(per_coord_sd_norm)),
        ("sd_mean.reg", float(per_coord_sd.mean()) if per_coord_sd is not None else None),
        ("sd_mean.norm", float(per_coord_sd_norm.mean()) if per_coord_sd_norm is not None else None),
    ]


# -- pca ----------------------------------------------------------------------

def _explained(mat) -> tuple:
    if mat is None or not np.isfinite(mat).all():
        return None, None
    eigvals = np.linalg.eigvalsh(mat)[::-1]
    eigvals = np.maximum(eigvals, 0.0)
    total = eigvals.sum()
    if total <= 0:
        return None, None
    shares = np.cumsum(eigvals) / total
    k = int(np.searchsorted(shares, 0.9) + 1)
    return k / mat.shape[0], float(eigvals[0] / total)


def pca_features(points: np.ndarray, y: np.ndarray, config) -> list:
    x = np.asarray(points, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("pca needs at least 3 points")
    init = np.column_stack([x, y])

    def cov(mat):
        return np.cov(mat, rowvar=False, ddof=1)

    def cor(mat):
        if np.any(mat.std(axis=0) == 0.0):
            return None
        return np.corrcoef(mat, rowvar=False)

    results = {}
    for key, matrix in (
        ("cov_x", cov(x)),
        ("cor_x", cor(x)),
        ("cov_init", cov(init)),
        ("cor_init", cor(init)),
    ):
        results[key] = _explained(matrix)
    entries = []
    for key in ("cov_x", "cor_x", "cov_init", "cor_init"):
        entries.append((f"expl_var.{key}", results[key][0]))
    for key in ("cov_x", "cor_x", "cov_init", "cor_init"):
        entries.append((f"expl_var_PC1.{key}", results[key][1]))
    return entries
