"""Correlation, rank-association, matrix difference and agreement measures."""

from __future__ import annotations

import math
from typing import Hashable, Sequence

import numpy as np

from .errors import ConfigError, DataError, DegenerateError
from .matrix import ScoreMatrix

KINDS = ("pearson", "kendall", "spearman", "tau_ap")


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DataError("x and y must be equal-length vectors")
    if x.size < 2:
        raise DataError("need at least two paired values")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values")
    return x, y


def pearson(x, y) -> float:
    x, y = _paired(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0 or syy <= 0:
        raise DegenerateError("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def fractional_ranks(v) -> np.ndarray:
    """1-based ranks, ties receive the mean of the positions they span."""
    v = np.asarray(v, dtype=float)
    order = np.argsort(v, kind="mergesort")
    sv = v[order]
    ranks = np.empty(v.size)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    x, y = _paired(x, y)
    return pearson(fractional_ranks(x), fractional_ranks(y))


def _tie_pairs(sorted_vals: np.ndarray) -> int:
    _, counts = np.unique(sorted_vals, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def _count_inversions(a: list) -> int:
    """Number of pairs i<j with a[i] > a[j] (bottom-up merge sort)."""
    n = len(a)
    src = list(a)
    dst = [None] * n
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    swaps += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    return swaps


def kendall_tau_b(x, y) -> float:
    """Tau-b in O(n log n): sort by (x, y), then count y inversions."""
    x, y = _paired(x, y)
    n = x.size
    n0 = n * (n - 1) // 2
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n1 = _tie_pairs(xs)
    # joint ties: runs equal in both x and y (consecutive after lexsort)
    n3 = 0
    run = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
            run += 1
        else:
            n3 += run * (run - 1) // 2
            run = 1
    n3 += run * (run - 1) // 2
    discordant = _count_inversions(ys.tolist())
    n2 = _tie_pairs(np.sort(ys))
    denom = (n0 - n1) * (n0 - n2)
    if denom == 0:
        raise DegenerateError("tau-b undefined: one vector is constant")
    concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * discordant
    tau = concordant_minus_discordant / math.sqrt(denom)
    return max(-1.0, min(1.0, tau))


def kendall_tau_b_naive(x, y) -> float:
    """O(n^2) pair enumeration with the same tau-b tie convention."""
    x, y = _paired(x, y)
    n = x.size
    conc = disc = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = np.sign(x[i] - x[j])
            sy = np.sign(y[i] - y[j])
            if sx == 0 and sy == 0:
                continue
            if sx == 0:
                tx += 1
            elif sy == 0:
                ty += 1
            elif sx == sy:
                conc += 1
            else:
                disc += 1
    denom = (conc + disc + tx) * (conc + disc + ty)
    if denom == 0:
        raise DegenerateError("tau-b undefined: one vector is constant")
    return (conc - disc) / math.sqrt(denom)


def pair_signs(values: np.ndarray, i_idx: np.ndarray, j_idx: np.ndarray) -> np.ndarray:
    """sign(v_i - v_j) over the last axis for the given index pairs."""
    return np.sign(values[..., i_idx] - values[..., j_idx])


def kendall_tau_b_many(rows: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Tau-b of each row of a (k, m) array against one reference m-vector.

    Uses explicit pair signs; returns NaN where tau-b is undefined.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    ref = np.asarray(ref, dtype=float)
    m = ref.size
    i_idx, j_idx = np.triu_indices(m, 1)
    s_ref = np.sign(ref[i_idx] - ref[j_idx])
    n_ref_untied = float(np.count_nonzero(s_ref))
    s_rows = np.sign(rows[:, i_idx] - rows[:, j_idx])
    num = s_rows @ s_ref
    untied = np.count_nonzero(s_rows, axis=1).astype(float)
    denom = np.sqrt(untied * n_ref_untied)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), np.nan)
    return np.clip(out, -1.0, 1.0)


def pearson_many(rows: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Pearson of each row against ``ref``; NaN where a row is constant."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    ref = np.asarray(ref, dtype=float)
    dr = ref - ref.mean()
    dx = rows - rows.mean(axis=1, keepdims=True)
    sxx = np.einsum("ij,ij->i", dx, dx)
    syy = float(dr @ dr)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (dx @ dr) / np.sqrt(sxx * syy)
    r[~(sxx > 0)] = np.nan
    if syy <= 0:
        r[:] = np.nan
    return np.clip(r, -1.0, 1.0)


def tau_ap(x, y, return_tie_flag: bool = False):
    """AP rank correlation of ranking-by-x against reference ranking-by-y.

    Both vectors are scores (higher = better).  Ties in either vector are
    broken by stable index order; the optional flag reports whether the
    reference contained ties.
    """
    x, y = _paired(x, y)
    n = x.size
    est_order = np.argsort(-x, kind="stable")
    ref_pos = np.empty(n, dtype=np.int64)
    ref_pos[np.argsort(-y, kind="stable")] = np.arange(n)
    pos = ref_pos[est_order]
    total = 0.0
    for i in range(1, n):
        correct = int(np.count_nonzero(pos[:i] < pos[i]))
        total += correct / i
    value = 2.0 * total / (n - 1) - 1.0
    if return_tie_flag:
        return value, bool(np.unique(y).size < n)
    return value


def correlation(kind: str, x, y) -> float:
    """Dispatch to pearson, kendall (tau-b), spearman or tau_ap."""
    if kind == "pearson":
        return pearson(x, y)
    if kind == "kendall":
        return kendall_tau_b(x, y)
    if kind == "spearman":
        return spearman(x, y)
    if kind == "tau_ap":
        return tau_ap(x, y)
    raise ConfigError(f"unknown correlation kind {kind!r}; choose from {KINDS}")


# ---------------------------------------------------------------- RBO


def _check_p(p: float):
    if not 0.0 < p < 1.0:
        raise ConfigError(f"p must lie in (0, 1), got {p}")


def rbo(ranking_a: Sequence[Hashable], ranking_b: Sequence[Hashable], p: float = 0.9) -> float:
    """Extrapolated rank-biased overlap of two rankings of the same items."""
    _check_p(p)
    a, b = list(ranking_a), list(ranking_b)
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise DataError("rankings must not repeat items")
    if set(a) != set(b):
        raise DataError("rankings must cover the same items")
    k = len(a)
    if k == 0:
        raise DataError("empty rankings")
    seen_a: set = set()
    seen_b: set = set()
    overlap = 0
    acc = 0.0
    weight = 1.0
    for d in range(1, k + 1):
        ia, ib = a[d - 1], b[d - 1]
        if ia == ib:
            overlap += 1
        else:
            overlap += (ia in seen_b) + (ib in seen_a)
        seen_a.add(ia)
        seen_b.add(ib)
        weight *= p
        acc += overlap / d * weight
    value = (overlap / k) * p**k + (1.0 - p) / p * acc
    return min(1.0, max(0.0, value))


def ranking_from_scores(labels: Sequence[Hashable], scores) -> list:
    """Labels ordered by descending score, ties in stable label order."""
    scores = np.asarray(scores, dtype=float)
    return [labels[i] for i in np.argsort(-scores, kind="stable")]


def rbo_scores(x, y, p: float = 0.9, bottom_heavy: bool = False) -> float:
    """RBO between the rankings induced by two score vectors on shared items."""
    x, y = _paired(x, y)
    labels = list(range(x.size))
    ra, rb = ranking_from_scores(labels, x), ranking_from_scores(labels, y)
    if bottom_heavy:
        ra, rb = ra[::-1], rb[::-1]
    return rbo(ra, rb, p)


def tau_ap_bottom(x, y) -> float:
    """Bottom-heavy tau_AP: both rankings reversed before the top-heavy measure."""
    x, y = _paired(x, y)
    return tau_ap(-x[::-1], -y[::-1])


def rbo_top_weight(p: float, depth: int) -> float:
    """Share of the total RBO weight carried by the first ``depth`` ranks."""
    _check_p(p)
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    partial = sum(p**i / i for i in range(1, depth))
    tail = math.log(1.0 / (1.0 - p)) - partial
    return 1.0 - p ** (depth - 1) + (1.0 - p) / p * depth * tail


def rbo_p_for(top_fraction: float, weight: float, list_len: int, tol: float = 1e-9) -> float:
    """p such that the top ceil(top_fraction * list_len) ranks carry ``weight``."""
    if not 0.0 < top_fraction <= 1.0:
        raise ConfigError("top_fraction must lie in (0, 1]")
    if not 0.0 < weight < 1.0:
        raise ConfigError("weight must lie in (0, 1)")
    if list_len < 1:
        raise ConfigError("list_len must be >= 1")
    depth = max(1, math.ceil(top_fraction * list_len - 1e-12))
    lo, hi = 1e-12, 1.0 - 1e-12
    f_lo = rbo_top_weight(lo, depth) - weight
    f_hi = rbo_top_weight(hi, depth) - weight
    if f_lo * f_hi > 0:
        raise DegenerateError("no p in (0, 1) reaches the requested weight")
    # top weight decreases in p
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rbo_top_weight(mid, depth) > weight:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- other


def matrix_delta(a: ScoreMatrix, b: ScoreMatrix) -> float:
    """Mean absolute cellwise difference of two equally labelled matrices."""
    if a.values.shape != b.values.shape:
        raise DataError(f"shape mismatch {a.values.shape} vs {b.values.shape}")
    if not a.same_labels(b):
        raise DataError("matrices carry different labels")
    if a.values.size == 0:
        raise DataError("empty matrices")
    return float(np.mean(np.abs(a.values - b.values)))


def pairwise_agreement(x_baseline, y) -> float:
    """Share of all C(n,2) pairs that are strictly ordered by x and kept in that order by y."""
    x = np.asarray(x_baseline, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be equal-length vectors")
    n = x.size
    if n < 2:
        raise DataError("need at least two items")
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    i, j = np.triu_indices(n, 1)
    good = np.count_nonzero((xs[i] != xs[j]) & (ys[i] < ys[j]))
    return good / (n * (n - 1) / 2)


LEVELS = ("nominal", "ordinal", "interval")


def _delta_matrix(values: np.ndarray, counts: np.ndarray, level: str) -> np.ndarray:
    if level == "nominal":
        return (values[:, None] != values[None, :]).astype(float)
    if level == "interval":
        return (values[:, None] - values[None, :]) ** 2
    if level == "ordinal":
        cum = np.concatenate([[0.0], np.cumsum(counts)])
        # sum of n_g for g between c and k inclusive, minus half the end counts
        lo = np.minimum.outer(np.arange(values.size), np.arange(values.size))
        hi = np.maximum.outer(np.arange(values.size), np.arange(values.size))
        span = cum[hi + 1] - cum[lo] - (counts[:, None] + counts[None, :]) / 2.0
        return span**2
    raise ConfigError(f"unknown level {level!r}; choose from {LEVELS}")


def coincidence_matrix(data) -> tuple[np.ndarray, np.ndarray]:
    """Values and coincidence matrix of a raters x items table (NaN = missing)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DataError("agreement data must be raters x items")
    present = ~np.isnan(data)
    values = np.unique(data[present])
    o = np.zeros((values.size, values.size))
    for u in range(data.shape[1]):
        col = data[present[:, u], u]
        mu = col.size
        if mu < 2:
            continue
        idx = np.searchsorted(values, col)
        cnt = np.bincount(idx, minlength=values.size).astype(float)
        o += (np.outer(cnt, cnt) - np.diag(cnt)) / (mu - 1)
    return values, o


def alpha_from_coincidence(o: np.ndarray, values: np.ndarray, level: str) -> np.ndarray:
    """Krippendorff's alpha for one or a stack (..., v, v) of coincidence matrices."""
    o = np.asarray(o, dtype=float)
    n_c = o.sum(axis=-1)
    n = n_c.sum(axis=-1)
    if level == "ordinal":
        flat = o.reshape(-1, *o.shape[-2:])
        nc_flat = n_c.reshape(-1, o.shape[-1])
        out = np.empty(flat.shape[0])
        for i in range(flat.shape[0]):
            d = _delta_matrix(values, nc_flat[i], level)
            out[i] = _alpha_one(flat[i], nc_flat[i], d)
        return out.reshape(o.shape[:-2])
    d = _delta_matrix(np.asarray(values, dtype=float), None, level)
    d_o = np.einsum("...ij,ij->...", o, d)
    d_e = np.einsum("...i,...j,ij->...", n_c, n_c, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = 1.0 - (n - 1) * d_o / d_e
    alpha = np.where(d_e > 0, alpha, 1.0)
    return alpha


def _alpha_one(o, n_c, d) -> float:
    n = n_c.sum()
    d_e = float(n_c @ d @ n_c)
    if d_e <= 0:
        return 1.0
    return float(1.0 - (n - 1) * float(np.sum(o * d)) / d_e)


def krippendorff_alpha(data, level: str = "nominal") -> float:
    """Krippendorff's alpha of a raters x items table with NaN for missing cells.

    Items rated by fewer than two raters are ignored.  If every pairable value
    is identical the expected disagreement is zero and alpha is 1.0.
    """
    if level not in LEVELS:
        raise ConfigError(f"unknown level {level!r}; choose from {LEVELS}")
    values, o = coincidence_matrix(data)
    if o.sum() <= 0:
        raise DegenerateError("no item is rated by two or more raters")
    n_c = o.sum(axis=1)
    return _alpha_one(o, n_c, _delta_matrix(values, n_c, level))


def default_level(num_levels: int) -> str:
    """Nominal for scales with at most four levels, interval otherwise."""
    return "nominal" if num_levels <= 4 else "interval"
