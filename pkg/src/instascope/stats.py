"""Nonparametric two-sample tests, FDR correction, and aggregations.

Everything here is hand-rolled on numpy: empirical-CDF sup distance
with the asymptotic Kolmogorov p-value, rank-sum test with midranks
(exact enumeration for pooled sizes up to 12), Benjamini-Hochberg
step-up correction, rejection-rate aggregations over group families,
ECDF step points, and a moment-based normality check.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .io import write_csv

EXACT_RANK_LIMIT = 12  # pooled size at or below which the rank test is exact


@dataclass(frozen=True)
class TestRecord:
    """Outcome of one two-sample (or one-sample) hypothesis test."""

    statistic: float
    p_value: float
    n1: int
    n2: int
    method: str  # "KS", "MWU" or "JarqueBera"


@dataclass(frozen=True)
class RejectionSummary:
    """Rejections over a family of corrected tests."""

    unit: str  # "per-feature", "per-instance" or "per-function"
    numerator: int
    denominator: int

    @property
    def rate(self) -> float:
        return self.numerator / self.denominator


def pair_count(n_groups: int) -> int:
    """Number of unordered comparison pairs among n groups."""
    return n_groups * (n_groups - 1) // 2


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov

def _kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution (series form)."""
    if t < 1e-10:
        return 1.0
    total = 0.0
    sign = 1.0
    for r in range(1, 101):
        term = math.exp(-2.0 * (r * t) ** 2)
        if term == 0.0:
            break
        total += sign * term
        if term / max(total, 1e-300) <= 1e-16:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b) -> TestRecord:
    """Two-sample KS test: sup ECDF distance, asymptotic p-value with
    effective size n1*n2/(n1+n2)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    n1, n2 = a.size, b.size
    if n1 < 5 or n2 < 5:
        raise ValueError("ks_two_sample needs at least 5 observations per sample")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / n1
    cdf_b = np.searchsorted(b, pooled, side="right") / n2
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = n1 * n2 / (n1 + n2)
    p = _kolmogorov_sf(math.sqrt(en) * d)
    return TestRecord(statistic=d, p_value=p, n1=n1, n2=n2, method="KS")


def ks_uniform(sample, lower: float, upper: float) -> TestRecord:
    """One-sample KS test against Uniform(lower, upper), asymptotic p."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n < 5:
        raise ValueError("ks_uniform needs at least 5 observations")
    cdf = np.clip((x - lower) / (upper - lower), 0.0, 1.0)
    steps = np.arange(1, n + 1) / n
    d = float(max(np.max(steps - cdf), np.max(cdf - (steps - 1.0 / n))))
    p = _kolmogorov_sf(math.sqrt(n) * d)
    return TestRecord(statistic=d, p_value=p, n1=n, n2=0, method="KS")


# ---------------------------------------------------------------------------
# Mann-Whitney U

def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.size, dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b) -> TestRecord:
    """Two-sided rank-sum test with midrank ties.

    Exact permutation enumeration when n1+n2 <= EXACT_RANK_LIMIT, else a
    normal approximation with tie-corrected variance and continuity
    correction. The reported statistic is U of the first sample.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = a.size, b.size
    if n1 < 3 or n2 < 3:
        raise ValueError("mann_whitney_u needs at least 3 observations per sample")
    pooled = np.concatenate([a, b])
    n = n1 + n2
    ranks = _midranks(pooled)
    u1 = float(np.sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0)

    if np.all(pooled == pooled[0]):
        return TestRecord(statistic=n1 * n2 / 2.0, p_value=1.0, n1=n1, n2=n2, method="MWU")

    if n <= EXACT_RANK_LIMIT:
        rank_offset = n1 * (n1 + 1) / 2.0
        total = 0
        le = 0
        ge = 0
        # ranks are multiples of 1/2, so all sums and comparisons are exact
        for combo in itertools.combinations(range(n), n1):
            u = ranks[list(combo)].sum() - rank_offset
            total += 1
            if u <= u1:
                le += 1
            if u >= u1:
                ge += 1
        p = min(1.0, 2.0 * min(le / total, ge / total))
        return TestRecord(statistic=u1, p_value=p, n1=n1, n2=n2, method="MWU")

    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0.0:
        return TestRecord(statistic=u1, p_value=1.0, n1=n1, n2=n2, method="MWU")
    mean = n1 * n2 / 2.0
    z = (abs(u1 - mean) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _norm_sf(max(z, 0.0)))
    return TestRecord(statistic=u1, p_value=p, n1=n1, n2=n2, method="MWU")


# ---------------------------------------------------------------------------
# multiple-testing correction

def benjamini_hochberg(pvals, alpha: float = 0.01):
    """Step-up FDR correction.

    Returns (flags, adjusted) in the input order: flags reject the k
    smallest p-values where k is the largest index with
    p_(k) <= k/m * alpha; adjusted values are min_{j>=i} m*p_(j)/j,
    clipped to 1.
    """
    p = np.asarray(list(pvals), dtype=np.float64)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    m = p.size
    if m == 0:
        return [], []
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    scaled = ranked * m / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    threshold = np.arange(1, m + 1) / m * alpha
    passing = np.nonzero(ranked <= threshold)[0]
    flags_sorted = np.zeros(m, dtype=bool)
    if passing.size:
        flags_sorted[: passing[-1] + 1] = True
    flags = np.empty(m, dtype=bool)
    adjusted = np.empty(m, dtype=np.float64)
    flags[order] = flags_sorted
    adjusted[order] = adjusted_sorted
    return flags.tolist(), adjusted.tolist()


# ---------------------------------------------------------------------------
# family aggregations

_TESTS = {"KS": ks_two_sample, "MWU": mann_whitney_u}


@dataclass
class FamilyResult:
    """All pair tests of one comparison family, BH-corrected together."""

    n_groups: int
    pairs: list  # successful (i, j) pairs, i < j
    records: list  # TestRecord per successful pair
    flags: list  # rejection after correction, per successful pair
    adjusted: list  # adjusted p-value per successful pair
    failures: list = field(default_factory=list)  # (i, j, reason)

    def rejection_rate(self) -> RejectionSummary:
        return RejectionSummary(unit="per-feature", numerator=int(sum(self.flags)),
                                denominator=len(self.records))

    def per_group_fractions(self):
        """One-vs-rest rejection fraction per group (Fig-3-style statistic)."""
        num = np.zeros(self.n_groups, dtype=int)
        den = np.zeros(self.n_groups, dtype=int)
        for (i, j), rejected in zip(self.pairs, self.flags):
            den[i] += 1
            den[j] += 1
            if rejected:
                num[i] += 1
                num[j] += 1
        return [RejectionSummary(unit="per-instance", numerator=int(num[i]),
                                 denominator=int(den[i]) if den[i] else 1)
                for i in range(self.n_groups)]


def pairwise_family(groups, test: str = "KS", alpha: float = 0.01) -> FamilyResult:
    """Test every unordered group pair and correct across the family.

    A pair whose test precondition fails is excluded from both the
    numerator and denominator and listed under ``failures``.
    """
    groups = list(groups)
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    func = _TESTS[test]
    pairs, records, failures = [], [], []
    for i, j in itertools.combinations(range(len(groups)), 2):
        try:
            rec = func(groups[i], groups[j])
        except ValueError as exc:
            failures.append((i, j, str(exc)))
            continue
        pairs.append((i, j))
        records.append(rec)
    if not records:
        raise ValueError("no test pair succeeded")
    flags, adjusted = benjamini_hochberg([r.p_value for r in records], alpha)
    return FamilyResult(n_groups=len(groups), pairs=pairs, records=records,
                        flags=flags, adjusted=adjusted, failures=failures)


def pairwise_rejection_rate(groups, test: str = "KS", alpha: float = 0.01,
                            log=None) -> RejectionSummary:
    """Fraction of BH-corrected rejections over all unordered group pairs."""
    family = pairwise_family(groups, test, alpha)
    if log is not None:
        log.extend(family.failures)
    return family.rejection_rate()


def one_vs_rest_rejection(groups, test: str = "KS", alpha: float = 0.01,
                          log=None):
    """Per-group fraction of rejected tests against each other group.

    Each unordered pair is tested once and BH-corrected within the full
    pair family; a pair's outcome counts towards both its groups.
    """
    family = pairwise_family(groups, test, alpha)
    if log is not None:
        log.extend(family.failures)
    return family.per_group_fractions()


def export_test_family(family: FamilyResult, family_id: str, unit_ids, path):
    """Test-family CSV: one row per pair with raw and adjusted p-values."""
    header = ["family_id", "unit_a", "unit_b", "statistic", "p", "p_adjusted",
              "rejected"]
    rows = []
    for (i, j), rec, adj, flag in zip(family.pairs, family.records,
                                      family.adjusted, family.flags):
        rows.append([family_id, unit_ids[i], unit_ids[j], rec.statistic,
                     rec.p_value, adj, int(flag)])
    write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# descriptive pieces

def ecdf(sample):
    """Right-continuous step points of the empirical CDF:
    sorted (value, cumulative fraction) with ties collapsed."""
    values = np.sort(np.asarray(sample, dtype=np.float64))
    if values.size == 0:
        raise ValueError("empty sample")
    uniq, counts = np.unique(values, return_counts=True)
    fractions = np.cumsum(counts) / values.size
    return [(float(v), float(f)) for v, f in zip(uniq, fractions)]


def normality_test(sample) -> TestRecord:
    """Moment-based (Jarque-Bera) normality test: n/6 * (S^2 + K^2/4)
    against a chi-square with 2 degrees of freedom."""
    y = np.asarray(sample, dtype=np.float64)
    n = y.size
    if n < 20:
        raise ValueError("normality_test needs at least 20 observations")
    centered = y - y.mean()
    m2 = np.mean(centered**2)
    if m2 == 0.0:
        return TestRecord(statistic=float("inf"), p_value=0.0, n1=n, n2=0,
                          method="JarqueBera")
    skew = np.mean(centered**3) / m2**1.5
    kurt = np.mean(centered**4) / m2**2 - 3.0
    jb = n / 6.0 * (skew**2 + kurt**2 / 4.0)
    p = math.exp(-jb / 2.0)  # chi-square sf with 2 dof
    return TestRecord(statistic=float(jb), p_value=float(p), n1=n, n2=0,
                      method="JarqueBera")
