"""Landscape feature computation over a design of experiments.

Seven feature groups that need no sampling beyond the design itself:
objective-distribution moments, regression meta-models, level-set
classification errors, principal-component summaries, nearest-better
statistics, dispersion ratios and information content of a
nearest-neighbor tour. The named catalogue below is the contract for
every export; missing values stay in the vector, tagged with a reason
code, and are never silently dropped.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .doe import Doe
from .io import write_csv

CATALOGUE_VERSION = "1.0"

LEVEL_QUANTILES = (0.10, 0.25, 0.50)
DISP_QUANTILES = (0.02, 0.05, 0.10, 0.25)
LEVEL_FOLDS = 10
KDE_GRID_SIZE = 512
KDE_PEAK_FLOOR = 1e-3  # maxima below this fraction of the mode are ripples
IC_EPS_GRID = np.concatenate([[0.0], np.logspace(-5.0, 15.0, 1000)])
IC_SETTLE_THRESHOLD = 0.05


def _pct(q: float) -> str:
    return f"{round(q * 100):02d}"


DISTR_NAMES = ("ela_distr.skewness", "ela_distr.kurtosis", "ela_distr.number_of_peaks")
META_NAMES = (
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
)
LEVEL_NAMES = tuple(
    f"ela_level.{stat}_{_pct(q)}"
    for q in LEVEL_QUANTILES
    for stat in ("mmce_lda", "mmce_qda", "lda_qda")
)
PCA_NAMES = (
    "pca.expl_var.cov_x",
    "pca.expl_var.cor_x",
    "pca.expl_var.cov_init",
    "pca.expl_var.cor_init",
    "pca.expl_var_PC1.cov_x",
    "pca.expl_var_PC1.cor_x",
    "pca.expl_var_PC1.cov_init",
    "pca.expl_var_PC1.cor_init",
)
NBC_NAMES = (
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
)
DISP_NAMES = tuple(
    f"disp.{stat}_{_pct(q)}"
    for stat in ("ratio_mean", "ratio_median", "diff_mean", "diff_median")
    for q in DISP_QUANTILES
)
IC_NAMES = ("ic.h_max", "ic.eps_s", "ic.eps_max", "ic.m0")

FEATURE_CATALOGUE = (
    DISTR_NAMES + META_NAMES + LEVEL_NAMES + PCA_NAMES + NBC_NAMES + DISP_NAMES + IC_NAMES
)

GROUP_NAMES = {
    "ela_distr": DISTR_NAMES,
    "ela_meta": META_NAMES,
    "ela_level": LEVEL_NAMES,
    "pca": PCA_NAMES,
    "nbc": NBC_NAMES,
    "disp": DISP_NAMES,
    "ic": IC_NAMES,
}


@dataclass
class FeatureVector:
    """Named feature values with explicit missing-value bookkeeping.

    ``values`` holds every requested catalogue name (NaN when missing);
    ``missing`` maps missing names to a reason code.
    """

    values: dict = field(default_factory=dict)
    missing: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def set(self, name, value):
        self.values[name] = float(value)

    def set_missing(self, name, reason):
        self.values[name] = float("nan")
        self.missing[name] = reason

    def is_missing(self, name) -> bool:
        return name in self.missing

    def update(self, other: "FeatureVector"):
        self.values.update(other.values)
        self.missing.update(other.missing)
        self.provenance.update(other.provenance)


def _new_vector(doe: Doe) -> FeatureVector:
    fv = FeatureVector()
    fv.provenance["problem"] = (doe.instance.fid, doe.instance.iid, doe.instance.dim)
    fv.provenance["doe_seed"] = doe.seed
    return fv


# ---------------------------------------------------------------------------
# objective distribution

def ela_distr(doe: Doe) -> FeatureVector:
    """Skewness, excess kurtosis (population moments) and the number of
    modes of a Gaussian KDE of the objective values."""
    y = np.asarray(doe.y, dtype=np.float64)
    if y.size < 10:
        raise ValueError("ela_distr needs at least 10 observations")
    fv = _new_vector(doe)
    centered = y - y.mean()
    m2 = np.mean(centered**2)
    if m2 == 0.0:
        fv.set_missing("ela_distr.skewness", "zero_variance")
        fv.set_missing("ela_distr.kurtosis", "zero_variance")
        fv.set("ela_distr.number_of_peaks", 1.0)
        return fv
    fv.set("ela_distr.skewness", np.mean(centered**3) / m2**1.5)
    fv.set("ela_distr.kurtosis", np.mean(centered**4) / m2**2 - 3.0)
    fv.set("ela_distr.number_of_peaks", _kde_peak_count(y))
    return fv


def _silverman_bandwidth(y: np.ndarray) -> float:
    sd = np.std(y, ddof=1)
    q75, q25 = np.percentile(y, [75.0, 25.0])
    iqr = q75 - q25
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * y.size ** (-0.2)


def _kde_peak_count(y: np.ndarray) -> int:
    bw = _silverman_bandwidth(y)
    if bw <= 0.0:
        return 1
    grid = np.linspace(y.min() - 3.0 * bw, y.max() + 3.0 * bw, KDE_GRID_SIZE)
    dens = kernels.kde_gaussian(y, grid, bw)
    floor = KDE_PEAK_FLOOR * dens.max()
    interior = dens[1:-1]
    is_peak = (interior > dens[:-2]) & (interior > dens[2:]) & (interior >= floor)
    return int(np.count_nonzero(is_peak))


# ---------------------------------------------------------------------------
# regression meta-models

def _adj_r2(y, fitted, n_predictors):
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    r2 = 1.0 - ss_res / ss_tot
    n = y.size
    return 1.0 - (1.0 - r2) * (n - 1) / (n - n_predictors - 1)


def _fit(design, y):
    coefs, _, _, sing = np.linalg.lstsq(design, y, rcond=None)
    cond = float(sing[0] / sing[-1]) if sing[-1] > 0 else float("inf")
    return coefs, design @ coefs, cond


def _interactions(X):
    n, d = X.shape
    cols = [X[:, i] * X[:, j] for i in range(d) for j in range(i + 1, d)]
    return np.column_stack(cols) if cols else np.empty((n, 0))


def ela_meta(doe: Doe) -> FeatureVector:
    """Least-squares linear and quadratic surrogate models of y over X."""
    X = np.asarray(doe.X, dtype=np.float64)
    y = np.asarray(doe.y, dtype=np.float64)
    n, d = X.shape
    if n <= 2 * d + 2:
        raise ValueError("ela_meta needs n > 2*dim + 2 observations")
    fv = _new_vector(doe)
    ones = np.ones((n, 1))
    if np.sum((y - y.mean()) ** 2) == 0.0:
        for name in META_NAMES:
            fv.set_missing(name, "zero_variance")
        return fv

    lin = np.hstack([ones, X])
    coefs, fitted, cond = _fit(lin, y)
    fv.provenance["ela_meta.design_cond"] = cond
    fv.set("ela_meta.lin_simple.adj_r2", _adj_r2(y, fitted, d))
    fv.set("ela_meta.lin_simple.intercept", coefs[0])
    slopes = np.abs(coefs[1:])
    fv.set("ela_meta.lin_simple.coef.min", slopes.min())
    fv.set("ela_meta.lin_simple.coef.max", slopes.max())
    if slopes.min() > 0.0:
        fv.set("ela_meta.lin_simple.coef.max_by_min", slopes.max() / slopes.min())
    else:
        fv.set_missing("ela_meta.lin_simple.coef.max_by_min", "zero_coefficient")

    inter = _interactions(X)
    _, fitted, _ = _fit(np.hstack([ones, X, inter]), y)
    fv.set("ela_meta.lin_w_interact.adj_r2", _adj_r2(y, fitted, d + inter.shape[1]))

    quad = np.hstack([ones, X, X**2])
    coefs, fitted, _ = _fit(quad, y)
    fv.set("ela_meta.quad_simple.adj_r2", _adj_r2(y, fitted, 2 * d))
    qcoefs = np.abs(coefs[1 + d:])
    if qcoefs.min() > 0.0:
        fv.set("ela_meta.quad_simple.cond", qcoefs.max() / qcoefs.min())
    else:
        fv.set_missing("ela_meta.quad_simple.cond", "zero_coefficient")

    _, fitted, _ = _fit(np.hstack([ones, X, X**2, inter]), y)
    fv.set("ela_meta.quad_w_interact.adj_r2", _adj_r2(y, fitted, 2 * d + inter.shape[1]))
    return fv


# ---------------------------------------------------------------------------
# level sets

def _stratified_folds(labels, n_folds, seed, attempt):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xE1A, attempt]))
    folds = np.empty(labels.size, dtype=np.int64)
    for cls in (False, True):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        folds[idx] = np.arange(idx.size) % n_folds
    return folds


def _regularized_inverse(cov):
    d = cov.shape[0]
    ridge = 1e-10 * max(np.trace(cov) / d, 1.0)
    for _ in range(12):
        try:
            chol = np.linalg.cholesky(cov + ridge * np.eye(d))
            break
        except np.linalg.LinAlgError:
            ridge *= 10.0
    else:  # pragma: no cover
        raise np.linalg.LinAlgError("covariance not repairable")
    inv = np.linalg.inv(chol)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return inv.T @ inv, logdet


def _gaussian_discriminant(X_train, labels, pooled):
    """Per-class Gaussian scorer; pooled=True ties the covariances (LDA)."""
    stats = []
    covs = []
    for cls in (False, True):
        pts = X_train[labels == cls]
        mu = pts.mean(axis=0)
        cov = np.cov(pts, rowvar=False, ddof=1)
        cov = np.atleast_2d(cov)
        prior = pts.shape[0] / X_train.shape[0]
        stats.append((mu, prior))
        covs.append((cov, pts.shape[0]))
    if pooled:
        total = sum(n - 1 for _, n in covs)
        cov = sum(c * (n - 1) for c, n in covs) / total
        inv, logdet = _regularized_inverse(cov)
        params = [(inv, logdet), (inv, logdet)]
    else:
        params = [_regularized_inverse(c) for c, _ in covs]

    def score(X_test):
        out = np.empty((X_test.shape[0], 2))
        for k, ((mu, prior), (inv, logdet)) in enumerate(zip(stats, params)):
            diff = X_test - mu
            maha = np.einsum("ij,jk,ik->i", diff, inv, diff)
            out[:, k] = -0.5 * logdet - 0.5 * maha + np.log(prior)
        return out[:, 1] > out[:, 0]

    return score


def _cv_mmce(X, labels, folds, pooled):
    errors = []
    for f in range(LEVEL_FOLDS):
        test = folds == f
        train = ~test
        if not test.any():
            continue
        train_labels = labels[train]
        if train_labels.all() or not train_labels.any():
            return None
        scorer = _gaussian_discriminant(X[train], train_labels, pooled)
        pred = scorer(X[test])
        errors.append(float(np.mean(pred != labels[test])))
    return float(np.mean(errors)) if errors else None


def ela_level(doe: Doe, quantiles=LEVEL_QUANTILES) -> FeatureVector:
    """Cross-validated misclassification error of linear and quadratic
    discriminants separating the best-q fraction of the design."""
    X = np.asarray(doe.X, dtype=np.float64)
    y = np.asarray(doe.y, dtype=np.float64)
    if y.size < 10 * LEVEL_FOLDS:
        raise ValueError(f"ela_level needs at least {10 * LEVEL_FOLDS} observations")
    fv = _new_vector(doe)
    for qi, q in enumerate(quantiles):
        suffix = _pct(q)
        names = [f"ela_level.{stat}_{suffix}" for stat in ("mmce_lda", "mmce_qda", "lda_qda")]
        labels = y <= np.quantile(y, q)
        if labels.all() or not labels.any():
            for name in names:
                fv.set_missing(name, "single_class")
            continue
        mmce = {}
        for pooled, key in ((True, "lda"), (False, "qda")):
            value = None
            for attempt in range(2):  # one re-stratification on degenerate folds
                folds = _stratified_folds(labels, LEVEL_FOLDS, doe.seed, qi * 2 + attempt)
                value = _cv_mmce(X, labels, folds, pooled)
                if value is not None:
                    break
            mmce[key] = value
        if mmce["lda"] is None or mmce["qda"] is None:
            for name in names:
                fv.set_missing(name, "degenerate_stratification")
            continue
        fv.set(names[0], mmce["lda"])
        fv.set(names[1], mmce["qda"])
        if mmce["qda"] > 0.0:
            fv.set(names[2], mmce["lda"] / mmce["qda"])
        elif mmce["lda"] == 0.0:
            fv.set(names[2], 1.0)
        else:
            fv.set_missing(names[2], "zero_denominator")
    return fv


# ---------------------------------------------------------------------------
# principal components

def _pca_pair(matrix, use_correlation):
    if use_correlation:
        stds = matrix.std(axis=0, ddof=1)
        if np.any(stds == 0.0):
            return None, None
        m = np.corrcoef(matrix, rowvar=False)
    else:
        m = np.cov(matrix, rowvar=False)
    eig = np.linalg.eigvalsh(np.atleast_2d(m))[::-1]
    eig = np.maximum(eig, 0.0)
    total = eig.sum()
    if total == 0.0:
        return None, None
    frac = np.cumsum(eig) / total
    k = int(np.searchsorted(frac, 0.9) + 1)
    return k / eig.size, float(eig[0] / total)


def pca_features(doe: Doe) -> FeatureVector:
    """Variance-explained summaries of X alone and of [X | y]."""
    X = np.asarray(doe.X, dtype=np.float64)
    y = np.asarray(doe.y, dtype=np.float64)
    if y.size <= X.shape[1]:
        raise ValueError("pca_features needs n > dim observations")
    fv = _new_vector(doe)
    init = np.column_stack([X, y])
    for tag, matrix in (("x", X), ("init", init)):
        for mode in ("cov", "cor"):
            expl, pc1 = _pca_pair(matrix, mode == "cor")
            names = (f"pca.expl_var.{mode}_{tag}", f"pca.expl_var_PC1.{mode}_{tag}")
            if expl is None:
                for name in names:
                    fv.set_missing(name, "zero_variance_column")
            else:
                fv.set(names[0], expl)
                fv.set(names[1], pc1)
    return fv


# ---------------------------------------------------------------------------
# nearest-better statistics

def _midrank(y):
    order = np.argsort(y, kind="stable")
    ranks = np.empty(y.size)
    sorted_y = y[order]
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and sorted_y[j + 1] == sorted_y[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _safe_corr(a, b):
    if np.std(a) == 0.0 or np.std(b) == 0.0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def nbc_features(doe: Doe, dist=None) -> FeatureVector:
    """Ratios and correlations of nearest-neighbor versus nearest-better
    distances; points with no better point inherit the largest better
    distance found elsewhere."""
    y = np.asarray(doe.y, dtype=np.float64)
    if y.size < 10:
        raise ValueError("nbc_features needs at least 10 observations")
    if dist is None:
        dist = kernels.pairwise_distances(doe.X)
    fv = _new_vector(doe)
    nn, nb = kernels.nearest_and_better(dist, y)
    finite = np.isfinite(nb)
    if not finite.any():
        for name in NBC_NAMES:
            fv.set_missing(name, "all_objectives_tied")
        return fv
    nb = np.where(finite, nb, nb[finite].max())

    sd_nn, sd_nb = np.std(nn, ddof=1), np.std(nb, ddof=1)
    if sd_nb > 0.0:
        fv.set("nbc.nn_nb.sd_ratio", sd_nn / sd_nb)
    else:
        fv.set_missing("nbc.nn_nb.sd_ratio", "zero_dispersion")
    fv.set("nbc.nn_nb.mean_ratio", nn.mean() / nb.mean())
    corr = _safe_corr(nn, nb)
    if corr is None:
        fv.set_missing("nbc.nn_nb.cor", "constant_vector")
    else:
        fv.set("nbc.nn_nb.cor", corr)
    if np.any(nn == 0.0):
        fv.set_missing("nbc.dist_ratio.coeff_var", "duplicate_points")
    else:
        ratio = nb / nn
        fv.set("nbc.dist_ratio.coeff_var", np.std(ratio, ddof=1) / ratio.mean())
    corr = _safe_corr(nb, _midrank(y))
    if corr is None:
        fv.set_missing("nbc.nb_fitness.cor", "constant_vector")
    else:
        fv.set("nbc.nb_fitness.cor", corr)
    return fv


# ---------------------------------------------------------------------------
# dispersion

def _pair_stats(dist, idx):
    sub = dist[np.ix_(idx, idx)]
    tri = sub[np.triu_indices(idx.size, k=1)]
    return float(tri.mean()), float(np.median(tri))


def disp_features(doe: Doe, quantiles=DISP_QUANTILES, dist=None) -> FeatureVector:
    """Pairwise-distance concentration of the best q-fraction of points,
    as a ratio of and a difference from the full design."""
    y = np.asarray(doe.y, dtype=np.float64)
    n = y.size
    if n < 2:
        raise ValueError("disp_features needs at least 2 observations")
    if dist is None:
        dist = kernels.pairwise_distances(doe.X)
    fv = _new_vector(doe)
    mean_all, median_all = _pair_stats(dist, np.arange(n))
    best_order = np.argsort(y, kind="stable")
    for q in quantiles:
        suffix = _pct(q)
        k = int(np.ceil(q * n))
        names = [f"disp.{stat}_{suffix}"
                 for stat in ("ratio_mean", "ratio_median", "diff_mean", "diff_median")]
        if k < 2:
            for name in names:
                fv.set_missing(name, "subset_too_small")
            continue
        mean_sub, median_sub = _pair_stats(dist, best_order[:k])
        fv.set(names[0], mean_sub / mean_all)
        fv.set(names[1], median_sub / median_all)
        fv.set(names[2], mean_all - mean_sub)
        fv.set(names[3], median_all - median_sub)
    return fv


# ---------------------------------------------------------------------------
# information content

def ic_features(doe: Doe, dist=None) -> FeatureVector:
    """Entropy of objective-change symbols along a nearest-neighbor tour.

    Threshold sensitivities (eps_s, eps_max) are reported on a log10
    scale; the partial-information fraction m0 is the share of direction
    changes among the nonzero symbols at threshold zero.
    """
    y = np.asarray(doe.y, dtype=np.float64)
    if y.size < 10:
        raise ValueError("ic_features needs at least 10 observations")
    if dist is None:
        dist = kernels.pairwise_distances(doe.X)
    fv = _new_vector(doe)
    order = kernels.nn_tour_order(dist)
    steps = dist[order[:-1], order[1:]]
    dy = np.diff(y[order])
    keep = steps > 0.0
    if not keep.any():
        for name in IC_NAMES:
            fv.set_missing(name, "degenerate_tour")
        return fv
    rates = dy[keep] / steps[keep]

    eps = IC_EPS_GRID[1:]
    signs = np.sign(rates).astype(np.int8)
    symbols = signs[:, None] * (np.abs(rates)[:, None] > eps[None, :]).astype(np.int8)
    entropy = _pair_entropy(symbols)
    fv.set("ic.h_max", float(entropy.max()))
    fv.set("ic.eps_max", float(np.log10(eps[int(np.argmax(entropy))])))
    settled = np.flatnonzero(entropy >= IC_SETTLE_THRESHOLD)
    if settled.size:
        fv.set("ic.eps_s", float(np.log10(eps[settled[-1]])))
    else:
        fv.set_missing("ic.eps_s", "entropy_below_threshold")

    nonzero = signs[signs != 0]
    if nonzero.size >= 2:
        fv.set("ic.m0", float(np.mean(nonzero[1:] != nonzero[:-1])))
    else:
        fv.set("ic.m0", 0.0)
    return fv


def _pair_entropy(symbols):
    """Base-6 entropy of unequal adjacent symbol pairs, per threshold."""
    m = symbols.shape[0]
    if m < 2:
        return np.zeros(symbols.shape[1])
    codes = (symbols[:-1].astype(np.int16) + 1) * 3 + (symbols[1:] + 1)
    total = m - 1
    h = np.zeros(symbols.shape[1])
    for code in (1, 2, 3, 5, 6, 7):  # the six unequal (a, b) pairs
        p = np.count_nonzero(codes == code, axis=0) / total
        nz = p > 0.0
        h[nz] -= p[nz] * np.log(p[nz]) / np.log(6.0)
    return h


# ---------------------------------------------------------------------------
# assembly

_GROUP_FUNCS = (
    ("ela_distr", lambda doe, dist: ela_distr(doe)),
    ("ela_meta", lambda doe, dist: ela_meta(doe)),
    ("ela_level", lambda doe, dist: ela_level(doe)),
    ("pca", lambda doe, dist: pca_features(doe)),
    ("nbc", lambda doe, dist: nbc_features(doe, dist)),
    ("disp", lambda doe, dist: disp_features(doe, dist=dist)),
    ("ic", lambda doe, dist: ic_features(doe, dist)),
)


def compute_all(doe: Doe) -> FeatureVector:
    """All feature groups in catalogue order.

    A failing group marks its features missing instead of aborting the
    vector; per-group wall times land in the provenance.
    """
    if doe.y.size < 10:
        raise ValueError("compute_all needs at least 10 observations")
    dist = kernels.pairwise_distances(doe.X)
    fv = _new_vector(doe)
    timings = {}
    for group, func in _GROUP_FUNCS:
        start = time.perf_counter()
        try:
            fv.update(func(doe, dist))
        except Exception as exc:  # noqa: BLE001 - group isolation is the contract
            for name in GROUP_NAMES[group]:
                fv.set_missing(name, f"group_error:{type(exc).__name__}")
        timings[group] = time.perf_counter() - start
    fv.provenance["timings"] = timings
    fv.values = {name: fv.values[name] for name in FEATURE_CATALOGUE}
    return fv


def drop_degenerate(rows):
    """Split the catalogue into informative and degenerate features.

    A feature is degenerate when it is entirely missing or takes a
    single constant value (with no missing entries) across all rows.
    """
    rows = list(rows)
    if len(rows) < 2:
        raise ValueError("drop_degenerate needs at least 2 rows")
    kept, dropped = [], []
    for name in FEATURE_CATALOGUE:
        missing = [fv.is_missing(name) for fv in rows]
        if all(missing):
            dropped.append(name)
            continue
        values = [fv.values[name] for fv in rows]
        if not any(missing) and min(values) == max(values):
            dropped.append(name)
        else:
            kept.append(name)
    return kept, dropped


def export_feature_matrix(entries, path, missing_path=None):
    """Feature matrix CSV keyed by (fid, iid, dim, doe_seed); missing
    values become empty cells and are explained in a sidecar file."""
    header = ["fid", "iid", "dim", "doe_seed"] + list(FEATURE_CATALOGUE)
    rows = []
    reasons = []
    for fid, iid, dim, seed, fv in entries:
        row = [fid, iid, dim, seed]
        for name in FEATURE_CATALOGUE:
            row.append(None if fv.is_missing(name) else fv.values[name])
        rows.append(row)
        for name, reason in fv.missing.items():
            reasons.append([fid, iid, dim, seed, name, reason])
    write_csv(path, header, rows)
    if missing_path is not None:
        write_csv(missing_path, ["fid", "iid", "dim", "doe_seed", "feature", "reason"],
                  reasons)
