"""Self-contained statistical learners used by the feature groups and harnesses.

Everything here is written against numpy directly so the feature definitions
do not depend on the exact behavior of an external ML stack: OLS with
adjusted R^2, Gaussian discriminants (LDA, QDA and a two-component mixture
discriminant), stratified k-fold CV, a CART random forest with impurity
importances, and tie-corrected Kendall's tau.

All stochastic operations take explicit seeds; nothing reads global RNG
state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import check_deadline

__all__ = [
    "LinearFit",
    "ols_fit",
    "kfold",
    "lda_qda_mda_mmce",
    "ForestModel",
    "forest_train",
    "forest_predict",
    "kendall_tau",
]


# -- ordinary least squares ---------------------------------------------------

@dataclass(frozen=True)
class LinearFit:
    """OLS result. coefficients[0] is the intercept.

    adj_r2 is None when the adjustment denominator l - p - 1 is not positive.
    condition_info is the max/min ratio of absolute non-intercept
    coefficients (None when there are none).
    """

    coefficients: np.ndarray
    adj_r2: float | None
    condition_info: float | None


def ols_fit(design: np.ndarray, y: np.ndarray) -> LinearFit:
    """Least-squares fit of y on design columns plus an intercept.

    Uses the minimum-norm SVD solution, so rank-deficient and p >= l designs
    are handled without error.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    if design.ndim != 2 or y.shape != (design.shape[0],):
        raise ValueError("design must be (l, p) with matching y")
    l, p = design.shape
    if l < 2:
        raise ValueError("need at least 2 observations")
    a = np.column_stack([np.ones(l), design])
    beta, *_ = np.linalg.lstsq(a, y, rcond=None)
    residuals = y - a @ beta
    ss_res = float(residuals @ residuals)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    if l - p - 1 <= 0:
        adj_r2 = None
    else:
        adj_r2 = 1.0 - (1.0 - r2) * (l - 1) / (l - p - 1)
    cond = None
    if p >= 1:
        mags = np.abs(beta[1:])
        low = mags.min()
        cond = float(mags.max() / low) if low > 0 else float("inf")
    return LinearFit(coefficients=beta, adj_r2=adj_r2, condition_info=cond)


# -- cross-validation folds ---------------------------------------------------

def kfold(l: int, k: int, stratify=None, seed: int = 0) -> list[np.ndarray]:
    """Disjoint index folds covering range(l), sizes differing by at most 1.

    With ``stratify`` given, members of each class are dealt round-robin so
    per-fold class counts also differ by at most 1.
    """
    if k < 1 or k > l:
        raise ValueError("need 1 <= k <= l")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF]))
    if stratify is None:
        perm = rng.permutation(l)
        return [np.sort(fold) for fold in np.array_split(perm, k)]
    labels = np.asarray(stratify)
    if labels.shape != (l,):
        raise ValueError("stratify labels must have length l")
    dealt = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        dealt.append(rng.permutation(members))
    dealt = np.concatenate(dealt)
    folds = [dealt[i::k] for i in range(k)]
    return [np.sort(fold) for fold in folds]


# -- Gaussian discriminants ---------------------------------------------------

def _regularized(cov: np.ndarray) -> np.ndarray:
    """Return a symmetric positive-definite version of cov.

    Adds lam*I with lam = 1e-8 * trace/dim when the Cholesky factorization
    fails, escalating lam tenfold until it succeeds.
    """
    dim = cov.shape[0]
    cov = (cov + cov.T) / 2.0
    trace = float(np.trace(cov))
    lam = 1e-8 * trace / dim
    if not lam > 0.0:  # zero or underflowed-to-zero trace
        lam = 1e-8
    bump = 0.0
    for _ in range(40):
        try:
            np.linalg.cholesky(cov + bump * np.eye(dim))
            return cov + bump * np.eye(dim)
        except np.linalg.LinAlgError:
            bump = lam if bump == 0.0 else bump * 10.0
    raise np.linalg.LinAlgError("covariance could not be regularized")


def _log_gaussian(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    chol = np.linalg.cholesky(cov)
    with np.errstate(over="ignore"):  # collapsed covariances push maha to inf
        sol = solve_triangular(chol, (x - mean).T, lower=True)
        maha = np.einsum("ij,ij->j", sol, sol)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    dim = mean.size
    return -0.5 * (dim * np.log(2.0 * np.pi) + logdet + maha)


@dataclass
class _Gaussians:
    """Per-class mixture-of-Gaussians scores; covers LDA/QDA/MDA alike."""

    classes: np.ndarray
    log_priors: np.ndarray
    means: list        # per class: (k, dim) component means
    covs: list         # per class: list of k (dim, dim) covariances
    log_mix: list      # per class: (k,) log mixing weights

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        scores = np.empty((x.shape[0], self.classes.size))
        for c in range(self.classes.size):
            comp = np.stack(
                [
                    self.log_mix[c][k] + _log_gaussian(x, self.means[c][k], self.covs[c][k])
                    for k in range(len(self.covs[c]))
                ]
            )
            scores[:, c] = self.log_priors[c] + logsumexp(comp, axis=0)
        return self.classes[np.argmax(scores, axis=1)]


def _fit_lda(x, labels) -> _Gaussians:
    classes = np.unique(labels)
    l, dim = x.shape
    means, scatter = [], np.zeros((dim, dim))
    priors = np.empty(classes.size)
    for i, cls in enumerate(classes):
        rows = x[labels == cls]
        mu = rows.mean(axis=0)
        means.append(mu[None, :])
        centered = rows - mu
        scatter += centered.T @ centered
        priors[i] = rows.shape[0] / l
    denom = max(l - classes.size, 1)
    pooled = _regularized(scatter / denom)
    return _Gaussians(
        classes=classes,
        log_priors=np.log(priors),
        means=means,
        covs=[[pooled]] * classes.size,
        log_mix=[np.zeros(1)] * classes.size,
    )


def _fit_qda(x, labels) -> _Gaussians:
    classes = np.unique(labels)
    l, dim = x.shape
    means, covs = [], []
    priors = np.empty(classes.size)
    for i, cls in enumerate(classes):
        rows = x[labels == cls]
        mu = rows.mean(axis=0)
        means.append(mu[None, :])
        if rows.shape[0] >= 2:
            cov = np.cov(rows, rowvar=False, ddof=1).reshape(dim, dim)
        else:
            cov = np.eye(dim)
        covs.append([_regularized(cov)])
        priors[i] = rows.shape[0] / l
    return _Gaussians(
        classes=classes,
        log_priors=np.log(priors),
        means=means,
        covs=covs,
        log_mix=[np.zeros(1)] * classes.size,
    )


_EM_MAX_ITER = 100
_EM_TOL = 1e-6


def _fit_class_mixture(rows: np.ndarray, rng, deadline=None) -> tuple:
    """Two-component Gaussian mixture by EM; falls back to one Gaussian."""
    n, dim = rows.shape
    base = np.cov(rows, rowvar=False, ddof=1).reshape(dim, dim) if n >= 2 else np.eye(dim)
    base = _regularized(base)
    distinct = np.unique(rows, axis=0)
    if n < 4 or distinct.shape[0] < 2:
        return rows.mean(axis=0)[None, :], [base], np.zeros(1)
    picks = rng.choice(distinct.shape[0], size=2, replace=False)
    means = distinct[picks].copy()
    covs = [base.copy(), base.copy()]
    log_mix = np.log(np.array([0.5, 0.5]))
    prev_ll = -np.inf
    for _ in range(_EM_MAX_ITER):
        check_deadline(deadline)
        comp = np.stack(
            [log_mix[k] + _log_gaussian(rows, means[k], covs[k]) for k in range(2)]
        )
        norm = logsumexp(comp, axis=0)
        # a dead component or a collapsed covariance (some row at -inf under
        # both components) degrades the mixture: keep the single Gaussian
        if not np.isfinite(norm).all():
            return rows.mean(axis=0)[None, :], [base], np.zeros(1)
        ll = float(norm.sum())
        resp = np.exp(comp - norm)
        weights = resp.sum(axis=1)
        if not np.isfinite(weights).all() or weights.min() < 1e-8:
            return rows.mean(axis=0)[None, :], [base], np.zeros(1)
        log_mix = np.log(weights / n)
        base_trace = float(np.trace(base))
        for k in range(2):
            mu = resp[k] @ rows / weights[k]
            centered = rows - mu
            cov = (resp[k][:, None] * centered).T @ centered / weights[k]
            if not np.isfinite(cov).all() or np.trace(cov) < 1e-12 * base_trace:
                # component glued itself to a single point
                return rows.mean(axis=0)[None, :], [base], np.zeros(1)
            means[k] = mu
            covs[k] = _regularized(cov)
        if abs(ll - prev_ll) < _EM_TOL:
            break
        prev_ll = ll
    return means, covs, log_mix


def _fit_mda(x, labels, rng, deadline=None) -> _Gaussians:
    classes = np.unique(labels)
    l = x.shape[0]
    means, covs, log_mix = [], [], []
    priors = np.empty(classes.size)
    for i, cls in enumerate(classes):
        rows = x[labels == cls]
        m, c, lm = _fit_class_mixture(rows, rng, deadline)
        means.append(m)
        covs.append(c)
        log_mix.append(lm)
        priors[i] = rows.shape[0] / l
    return _Gaussians(
        classes=classes,
        log_priors=np.log(priors),
        means=means,
        covs=covs,
        log_mix=log_mix,
    )


def lda_qda_mda_mmce(
    x: np.ndarray,
    labels: np.ndarray,
    folds: int = 10,
    seed: int = 0,
    deadline: float | None = None,
) -> tuple[float, float, float]:
    """Mean misclassification error of LDA/QDA/MDA under stratified CV.

    All three classifiers share the same fold assignment.  A fold whose
    training complement would miss a class triggers a re-deal with a bumped
    seed; if a class has a single member that cannot help, so the lone
    training class then predicts itself everywhere.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    l = x.shape[0]
    if l < 2 * folds:
        raise ValueError(f"need at least {2 * folds} observations")
    if np.unique(labels).size < 2:
        raise ValueError("both classes must be present")

    fold_sets = kfold(l, folds, stratify=labels, seed=seed)
    for retry in range(1, 8):
        ok = all(
            np.unique(np.delete(labels, fold)).size >= 2 for fold in fold_sets
        )
        if ok:
            break
        fold_sets = kfold(l, folds, stratify=labels, seed=seed + retry)

    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 1]))
    errors = np.zeros(3)
    for fold in fold_sets:
        check_deadline(deadline)
        train = np.delete(np.arange(l), fold)
        x_tr, y_tr = x[train], labels[train]
        x_te, y_te = x[fold], labels[fold]
        if np.unique(y_tr).size < 2:
            pred = np.full(fold.size, y_tr[0])
            miss = np.mean(pred != y_te)
            errors += miss
            continue
        for slot, model in enumerate(
            (
                _fit_lda(x_tr, y_tr),
                _fit_qda(x_tr, y_tr),
                _fit_mda(x_tr, y_tr, rng, deadline),
            )
        ):
            errors[slot] += np.mean(model.predict(x_te) != y_te)
    errors /= len(fold_sets)
    return float(errors[0]), float(errors[1]), float(errors[2])


# -- CART random forest -------------------------------------------------------

@dataclass(frozen=True)
class ForestModel:
    trees: list
    importances: np.ndarray
    n_trees: int
    seed: int
    classes: np.ndarray


class _Tree:
    """CART arrays: internal nodes carry (feature, threshold), leaves a class."""

    __slots__ = ("feature", "threshold", "left", "right", "leaf_class")

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.leaf_class = []

    def add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        return len(self.feature) - 1

    def predict_codes(self, x: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        leaf = np.asarray(self.leaf_class)
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = x[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(go_left, left[cur], right[cur])
            active = feature[node] >= 0
        return leaf[node]


def _gini_from_counts(counts: np.ndarray, total) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = counts / np.asarray(total)[..., None]
        g = 1.0 - np.einsum("...c,...c->...", frac, frac)
    return g


def _best_split(x_sub, codes_sub, feat_candidates, n_classes):
    """Best (feature, threshold, gain-ish score) over candidate features.

    Returns (feature, threshold, left_mask, decrease) or None when no
    candidate feature separates the node.
    """
    n = codes_sub.size
    parent_counts = np.bincount(codes_sub, minlength=n_classes)
    parent_gini = _gini_from_counts(parent_counts[None, :], np.array([n]))[0]
    best = None
    best_score = -np.inf
    for feat in feat_candidates:
        col = x_sub[:, feat]
        order = np.argsort(col, kind="stable")
        sorted_col = col[order]
        valid = sorted_col[1:] > sorted_col[:-1]
        if not valid.any():
            continue
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), codes_sub[order]] = 1.0
        left_counts = np.cumsum(onehot, axis=0)[:-1]
        left_n = np.arange(1, n)
        right_counts = parent_counts[None, :] - left_counts
        right_n = n - left_n
        gini_l = _gini_from_counts(left_counts, left_n)
        gini_r = _gini_from_counts(right_counts, right_n)
        weighted = (left_n * gini_l + right_n * gini_r) / n
        weighted[~valid] = np.inf
        pos = int(np.argmin(weighted))
        score = parent_gini - weighted[pos]
        if score > best_score + 1e-15:
            thr = 0.5 * (sorted_col[pos] + sorted_col[pos + 1])
            best = (feat, thr, col <= thr, score)
            best_score = score
    return best


def _grow_tree(x, codes, n_classes, mtry, rng, importance_acc):
    tree = _Tree()
    n_total = codes.size
    root = tree.add_node()
    stack = [(root, np.arange(n_total))]
    while stack:
        node_id, idx = stack.pop()
        codes_sub = codes[idx]
        counts = np.bincount(codes_sub, minlength=n_classes)
        if np.count_nonzero(counts) == 1 or idx.size < 2:
            tree.leaf_class[node_id] = int(np.argmax(counts))
            continue
        feats = rng.choice(x.shape[1], size=mtry, replace=False)
        found = _best_split(x[idx], codes_sub, feats, n_classes)
        if found is None:
            tree.leaf_class[node_id] = int(np.argmax(counts))
            continue
        feat, thr, left_mask, decrease = found
        importance_acc[feat] += idx.size / n_total * decrease
        left_id = tree.add_node()
        right_id = tree.add_node()
        tree.feature[node_id] = int(feat)
        tree.threshold[node_id] = float(thr)
        tree.left[node_id] = left_id
        tree.right[node_id] = right_id
        stack.append((left_id, idx[left_mask]))
        stack.append((right_id, idx[~left_mask]))
    return tree


def forest_train(
    x: np.ndarray, labels: np.ndarray, n_trees: int, seed: int = 0
) -> ForestModel:
    """Bagged CART forest with Gini splits and sqrt-p feature subsampling."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("training set must be a non-empty (l, p) matrix")
    if labels.shape != (x.shape[0],):
        raise ValueError("one label per row required")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    classes, codes = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    l, p = x.shape
    mtry = int(np.ceil(np.sqrt(p)))
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF]))
    trees = []
    importance_sum = np.zeros(p)
    split_trees = 0
    for _ in range(n_trees):
        boot = rng.integers(0, l, size=l)
        acc = np.zeros(p)
        trees.append(_grow_tree(x[boot], codes[boot], classes.size, mtry, rng, acc))
        total = acc.sum()
        if total > 0:
            importance_sum += acc / total
            split_trees += 1
    # averaged over the trees that actually split, so the sum stays 1
    importances = importance_sum / split_trees if split_trees else importance_sum
    return ForestModel(
        trees=trees,
        importances=importances,
        n_trees=n_trees,
        seed=seed,
        classes=classes,
    )


def forest_predict(model: ForestModel, x: np.ndarray) -> np.ndarray:
    """Majority vote over trees; ties go to the earlier class in sort order."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    votes = np.zeros((x.shape[0], model.classes.size), dtype=np.int64)
    for tree in model.trees:
        pred = tree.predict_codes(x)
        votes[np.arange(x.shape[0]), pred] += 1
    return model.classes[np.argmax(votes, axis=1)]


# -- rank correlation ---------------------------------------------------------

def kendall_tau(a: np.ndarray, b: np.ndarray) -> float | None:
    """Tie-corrected Kendall's tau_b; None when either vector is all tied."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length vectors with >= 2 entries")
    da = np.sign(a[:, None] - a[None, :])
    db = np.sign(b[:, None] - b[None, :])
    iu = np.triu_indices(a.size, k=1)
    prod = da[iu] * db[iu]
    concordant_minus_discordant = prod.sum()
    n0 = a.size * (a.size - 1) / 2
    ties_a = n0 - np.count_nonzero(da[iu])
    ties_b = n0 - np.count_nonzero(db[iu])
    if ties_a == n0 or ties_b == n0:
        return None
    denom = np.sqrt((n0 - ties_a) * (n0 - ties_b))
    return float(concordant_minus_discordant / denom)
