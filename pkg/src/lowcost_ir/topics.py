"""Topic-level analyses: significance agreement between a topic subset and the
full set, PCA, cosine complete-linkage clustering, one-for-cluster sampling,
HITS hubness and column injection."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

import numpy as np
from scipy import stats

from .errors import ConfigError, DataError, DegenerateError
from .matrix import ApMatrix, ScoreMatrix
from .subset_search import TopicMask

OUTCOMES = ("SSA", "SSD", "SN", "NS", "NN")


# ---------------------------------------------------------------- significance


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    mean_diff: float
    degenerate: bool = False


def paired_ttest(x, y) -> TestResult:
    """Two-tailed paired t-test with n - 1 degrees of freedom.

    Zero variance of the differences gives p = 1 when the mean difference is
    0 and p = 0 otherwise (flagged as degenerate).
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise DataError("need two equal-length vectors with at least 2 values")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    # a spread at rounding level (e.g. x + 0.1 vs x) counts as zero variance
    if sd <= 1e-12 * float(np.max(np.abs(d))) or not np.isfinite(sd):
        if mean == 0.0:
            return TestResult(0.0, 1.0, 0.0, True)
        return TestResult(math.copysign(math.inf, mean), 0.0, mean, True)
    t = mean / (sd / math.sqrt(d.size))
    p = float(2.0 * stats.t.sf(abs(t), d.size - 1))
    return TestResult(float(t), min(1.0, p), mean, False)


def wilcoxon_test(x, y) -> TestResult:
    """Wilcoxon signed-rank test: exact null for n <= 25, normal approximation above."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise DataError("need two equal-length vectors with at least 2 values")
    nz = d[d != 0]
    mean = float(d.mean())
    if nz.size == 0:
        return TestResult(0.0, 1.0, mean, True)
    method = "exact" if nz.size <= 25 else "approx"
    res = stats.wilcoxon(nz, method=method)
    return TestResult(float(res.statistic), float(res.pvalue), mean, False)


@dataclass(frozen=True)
class OutcomePair:
    outcome: str
    p_subset: float
    p_full: float
    sign_subset: int
    sign_full: int


def classify(sig_s: bool, sig_g: bool, sign_s: int, sign_g: int) -> str:
    if sig_s and sig_g:
        return "SSA" if sign_s == sign_g else "SSD"
    if sig_s:
        return "SN"
    if sig_g:
        return "NS"
    return "NN"


def outcome_class(x_subset, y_subset, x_full, y_full, alpha: float = 0.05,
                  test: str = "t", comparisons: int = 1) -> OutcomePair:
    """Five-way agreement of a significance test on a subset S and on the full set G.

    ``comparisons`` > 1 applies a Bonferroni correction to alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    fn = {"t": paired_ttest, "wilcoxon": wilcoxon_test}.get(test)
    if fn is None:
        raise ConfigError("test must be 't' or 'wilcoxon'")
    level = alpha / max(1, comparisons)
    rs, rg = fn(x_subset, y_subset), fn(x_full, y_full)
    ss, sg = int(np.sign(rs.mean_diff)), int(np.sign(rg.mean_diff))
    return OutcomePair(classify(rs.p_value < level, rg.p_value < level, ss, sg),
                       rs.p_value, rg.p_value, ss, sg)


def outcome_counts(a: ApMatrix, subset, pairs: Iterable[tuple[int, int]],
                   alpha: float = 0.05, test: str = "t") -> dict[str, int]:
    """Outcome class counts over run pairs for one topic subset (mask or indices)."""
    mask = np.zeros(a.values.shape[1], dtype=bool)
    sub = np.asarray(subset)
    if sub.dtype == bool:
        mask = sub
    else:
        mask[sub] = True
    if not mask.any():
        raise DataError("empty topic subset")
    counts = dict.fromkeys(OUTCOMES, 0)
    v = a.values
    for i, j in pairs:
        o = outcome_class(v[i, mask], v[j, mask], v[i], v[j], alpha, test)
        counts[o.outcome] += 1
    return counts


def outcome_histogram_csv(rows: Mapping[int, Mapping[str, int]],
                          stream: TextIO | None = None) -> str | None:
    """cardinality,SSA,SSD,SN,NS,NN as proportions per cardinality."""
    out = io.StringIO() if stream is None else stream
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["cardinality", *OUTCOMES])
    for c in sorted(rows):
        total = sum(rows[c].values()) or 1
        w.writerow([c, *("%.6g" % (rows[c].get(k, 0) / total) for k in OUTCOMES)])
    return out.getvalue() if stream is None else None


# ---------------------------------------------------------------- PCA


@dataclass(frozen=True)
class PcaResult:
    projected: np.ndarray
    explained_ratio: np.ndarray
    components: np.ndarray  # (d, k) columns are principal axes
    mean: np.ndarray
    k: int


def pca(points, variance_threshold: float = 0.9) -> PcaResult:
    """Center, eigendecompose the covariance, keep the fewest axes reaching the threshold."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("need an (n >= 2, d) point matrix")
    if not 0.0 < variance_threshold <= 1.0:
        raise ConfigError("variance_threshold must lie in (0, 1]")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (x.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = evals.sum()
    if total <= 0:
        ratio = np.zeros_like(evals)
        ratio[0] = 1.0
    else:
        ratio = evals / total
    cum = np.cumsum(ratio)
    if variance_threshold >= 1.0:
        k = evals.size
    else:
        k = int(np.searchsorted(cum, variance_threshold - 1e-12) + 1)
    k = min(max(k, 1), evals.size)
    comps = evecs[:, :k]
    return PcaResult(xc @ comps, ratio, comps, mean, k)


# ---------------------------------------------------------------- clustering


@dataclass(frozen=True)
class ClusterModel:
    assignment: np.ndarray  # cluster id per point, ids ordered by first member
    m: int
    merges: tuple  # full tree: (cluster_a, cluster_b, distance, new_size) in merge order
    feature_space: str = "raw"

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.m)


def cosine_distances(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise DataError("zero vector under cosine distance; cluster in PCA space "
                        "or shift the data by a small epsilon")
    u = x / norms[:, None]
    d = 1.0 - u @ u.T
    d = np.clip((d + d.T) / 2.0, 0.0, 2.0)
    np.fill_diagonal(d, 0.0)
    return d


def hcluster(points, m: int, distance: str = "cosine", linkage: str = "complete",
             feature_space: str = "raw") -> ClusterModel:
    """Agglomerative clustering cut at exactly m clusters.

    Each step merges the closest pair of active clusters; ties go to the pair
    with the smallest (first, second) cluster index, a cluster being indexed
    by its smallest member.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise DataError("points must be (n, d)")
    n = x.shape[0]
    if not 2 <= m <= n:
        raise ConfigError(f"m must lie in [2, {n}]")
    if distance == "cosine":
        d = cosine_distances(x)
    elif distance == "euclidean":
        d = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1), 0.0))
    else:
        raise ConfigError(f"unknown distance {distance!r}")
    combine = {"complete": np.maximum, "single": np.minimum}.get(linkage)
    if combine is None and linkage != "average":
        raise ConfigError(f"unknown linkage {linkage!r}")

    dist = d.copy()
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    label = np.arange(n)
    size = np.ones(n)
    merges = []
    assignment = None
    for step in range(n - 1):
        if step == n - m:
            assignment = _relabel(label)
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        flat = int(np.argmin(np.triu(masked, 1) + np.tril(np.full((n, n), np.inf))))
        i, j = divmod(flat, n)
        if linkage == "average":
            new = (dist[i] * size[i] + dist[j] * size[j]) / (size[i] + size[j])
        else:
            new = combine(dist[i], dist[j])
        merges.append((i, j, float(dist[i, j]), int(size[i] + size[j])))
        dist[i, :] = new
        dist[:, i] = new
        dist[i, i] = np.inf
        active[j] = False
        size[i] += size[j]
        label[label == j] = i
    if assignment is None:
        assignment = _relabel(label)
    return ClusterModel(assignment, m, tuple(merges), feature_space)


def _relabel(label: np.ndarray) -> np.ndarray:
    roots = sorted(set(label.tolist()))
    remap = {r: k for k, r in enumerate(roots)}
    return np.array([remap[v] for v in label], dtype=np.int64)


def one_for_cluster(model: ClusterModel, c: int, rng: np.random.Generator | int | None = 0) -> TopicMask:
    """Pick c topics spreading picks over clusters.

    Rounds draw one random unused topic from each cluster; when fewer picks
    remain than non-exhausted clusters, the clusters used are drawn at
    random.  Exhausted clusters are skipped in later rounds.
    """
    rng = np.random.default_rng(rng)
    n = model.assignment.size
    if not 1 <= c <= n:
        raise ConfigError(f"c must lie in [1, {n}]")
    pools = [list(model.members(k)) for k in range(model.m)]
    chosen = np.zeros(n, dtype=bool)
    picked = 0
    while picked < c:
        avail = [k for k in range(model.m) if pools[k]]
        need = c - picked
        if need < len(avail):
            avail = sorted(rng.choice(avail, size=need, replace=False).tolist())
        for k in avail:
            pos = int(rng.integers(len(pools[k])))
            chosen[pools[k].pop(pos)] = True
            picked += 1
    return TopicMask(chosen)


# ---------------------------------------------------------------- HITS


def hits_hubness(a: ScoreMatrix | np.ndarray, tol: float = 1e-10,
                 max_iter: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """(topic hub scores, system authority scores) by power iteration, L2-normalized."""
    v = a.values if isinstance(a, ScoreMatrix) else np.asarray(a, dtype=float)
    if np.any(v < 0):
        raise DataError("HITS needs a non-negative matrix")
    if not np.any(v > 0):
        raise DegenerateError("HITS on an all-zero matrix")
    hub = np.full(v.shape[1], 1.0 / math.sqrt(v.shape[1]))
    auth = v @ hub
    for _ in range(max_iter):
        auth = v @ hub
        auth /= np.linalg.norm(auth)
        new = v.T @ auth
        new /= np.linalg.norm(new)
        done = np.max(np.abs(new - hub)) < tol
        hub = new
        if done:
            break
    return hub, auth


# ---------------------------------------------------------------- injection


def inject_columns(artificial: ScoreMatrix, real: ApMatrix, topics: Iterable[str]) -> ScoreMatrix:
    """Replace the listed topic columns of ``artificial`` with the real ones."""
    if not artificial.same_labels(real):
        raise DataError("matrices carry different labels")
    vals = np.array(artificial.values)
    for t in topics:
        if t not in real.topics:
            raise DataError(f"unknown topic {t!r}")
        j = real.topics.index(t)
        vals[:, j] = real.values[:, j]
    return artificial._rebuild(artificial.systems, artificial.topics, vals)
