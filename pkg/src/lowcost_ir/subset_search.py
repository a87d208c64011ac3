"""Best/worst topic subsets per cardinality via a bi-objective evolutionary search.

Fitness of a topic subset is the correlation between system MAP computed on
the subset and MAP on the full topic set.  The search keeps, for every
cardinality, the top-K subsets ever evaluated.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .association import KINDS, fractional_ranks, tau_ap
from .errors import ConfigError, DataError
from .matrix import ApMatrix

SENTINEL = -2.0

try:
    from numba import njit
except ImportError:  # pragma: no cover - optional accelerator
    njit = None


def _kendall_rows_py(s, pi, pj, s_ref, ref_untied):
    sg = np.sign(s[:, pi] - s[:, pj])
    num = sg @ s_ref
    untied = np.count_nonzero(sg, axis=1).astype(float)
    denom = np.sqrt(untied * ref_untied)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / denom
    out[~(denom > 0)] = np.nan
    return out


if njit is not None:

    @njit(cache=True, nogil=True)
    def _kendall_rows(s, pi, pj, s_ref, ref_untied):
        out = np.empty(s.shape[0])
        for r in range(s.shape[0]):
            num = 0
            untied = 0
            for k in range(pi.size):
                d = s[r, pi[k]] - s[r, pj[k]]
                if d > 0:
                    num += s_ref[k]
                    untied += 1
                elif d < 0:
                    num -= s_ref[k]
                    untied += 1
            denom = np.sqrt(float(untied) * ref_untied)
            out[r] = num / denom if denom > 0 else np.nan
        return out

else:  # pragma: no cover
    _kendall_rows = _kendall_rows_py


# ---------------------------------------------------------------- masks


@dataclass(frozen=True)
class TopicMask:
    """Topic subset as a boolean vector over the matrix columns."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.array(self.bits, dtype=bool)
        if b.ndim != 1:
            raise DataError("mask must be one-dimensional")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def cardinality(self) -> int:
        return int(self.bits.sum())

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.bits).tolist())

    @classmethod
    def from_indices(cls, n: int, idx: Iterable[int]) -> "TopicMask":
        b = np.zeros(n, dtype=bool)
        b[list(idx)] = True
        return cls(b)

    def __array__(self, dtype=None, copy=None):
        return self.bits if dtype is None else self.bits.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, TopicMask) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())


def crossover(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Bitwise AND and OR children; the AND child may be empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DataError("masks differ in length")
    return a & b, a | b


def mutate(mask, prob: float, rng: np.random.Generator, max_retries: int = 100) -> np.ndarray:
    """Flip each bit independently with ``prob``; an empty result is re-drawn.

    After ``max_retries`` empty draws the input mask is returned unchanged.
    """
    if not 0.0 <= prob <= 1.0:
        raise ConfigError("mutation probability must lie in [0, 1]")
    mask = np.asarray(mask, dtype=bool)
    for _ in range(max_retries):
        out = mask ^ (rng.random(mask.shape) < prob)
        if out.any():
            return out
    return mask.copy()


# ---------------------------------------------------------------- fitness


def exact_grid(values: np.ndarray) -> np.ndarray:
    """Round cells onto a binary grid fine enough that any column sum is exact.

    With every cell a multiple of 2**-b and n * 2**b < 2**53, float64 sums
    over any subset of columns do not depend on summation order, so subset
    MAP comparisons are reproducible under any batching or BLAS kernel.
    """
    values = np.asarray(values, dtype=float)
    n = max(values.shape[-1], 1)
    bits = 52 - math.ceil(math.log2(n + 1))
    scale = float(2**bits)
    return np.round(values * scale) / scale


class SubsetEvaluator:
    """Vectorized fitness for many masks against one matrix.

    Returns the correlation for each mask, NaN where it is undefined.
    Evaluation is pure, so chunking over ``workers`` threads never changes
    the result.
    """

    def __init__(self, a: ApMatrix | np.ndarray, kind: str = "kendall",
                 workers: int = 1, chunk: int = 512):
        if kind not in KINDS:
            raise ConfigError(f"unknown correlation kind {kind!r}")
        values = a.values if isinstance(a, ApMatrix) else np.asarray(a, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 1:
            raise DataError("need a matrix with at least 2 systems and 1 topic")
        self.kind = kind
        self.m, self.n = values.shape
        self.at = np.ascontiguousarray(exact_grid(values).T)  # (n, m)
        self.ref = self.at.sum(axis=0)
        self.workers = max(1, int(workers))
        self.chunk = chunk
        self.evaluations = 0
        if kind == "kendall":
            self.pi, self.pj = np.triu_indices(self.m, 1)
            self.s_ref = np.sign(self.ref[self.pi] - self.ref[self.pj]).astype(np.int64)
            self.ref_untied = float(np.count_nonzero(self.s_ref))
        elif kind == "spearman":
            self.ref_cmp = fractional_ranks(self.ref)
        else:
            self.ref_cmp = self.ref

    def sums(self, masks: np.ndarray) -> np.ndarray:
        return np.asarray(masks, dtype=float) @ self.at

    def _pearson_rows(self, rows: np.ndarray, ref: np.ndarray) -> np.ndarray:
        dx = rows - rows.mean(axis=1, keepdims=True)
        dr = ref - ref.mean()
        sxx = np.sum(dx * dx, axis=1)
        sxy = np.sum(dx * dr, axis=1)
        syy = float(np.sum(dr * dr))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = sxy / np.sqrt(sxx * syy)
        r[~(sxx > 0)] = np.nan
        return np.clip(r, -1.0, 1.0)

    def _eval_chunk(self, masks: np.ndarray) -> np.ndarray:
        s = self.sums(masks)
        if self.kind == "kendall":
            out = _kendall_rows(s, self.pi, self.pj, self.s_ref, self.ref_untied)
            return np.clip(out, -1.0, 1.0)
        if self.kind == "pearson":
            return self._pearson_rows(s, self.ref_cmp)
        if self.kind == "spearman":
            ranks = np.vstack([fractional_ranks(r) for r in s])
            return self._pearson_rows(ranks, self.ref_cmp)
        out = np.empty(s.shape[0])
        for i, row in enumerate(s):
            out[i] = tau_ap(row, self.ref_cmp)
        return out

    def __call__(self, masks) -> np.ndarray:
        masks = np.atleast_2d(np.asarray(masks, dtype=bool))
        if masks.shape[1] != self.n:
            raise DataError(f"masks must have {self.n} bits")
        self.evaluations += masks.shape[0]
        parts = [masks[i : i + self.chunk] for i in range(0, masks.shape[0], self.chunk)]
        if self.workers > 1 and len(parts) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                res = list(pool.map(self._eval_chunk, parts))
        else:
            res = [self._eval_chunk(p) for p in parts]
        return np.concatenate(res) if res else np.empty(0)


def fitness(mask, a: ApMatrix, kind: str = "kendall") -> float:
    """Correlation of subset MAP with full MAP; -2 when undefined."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DataError("mask selects no topic")
    v = SubsetEvaluator(a, kind)(mask[None, :])[0]
    return SENTINEL if np.isnan(v) else float(v)


# ---------------------------------------------------------------- archive


@dataclass
class ParetoArchive:
    """Per-cardinality top-K subsets (topic index tuples) with their values."""

    n: int
    direction: str = "best"
    k: int = 10
    entries: dict = field(default_factory=dict)  # c -> list[(value, indices)]
    _keys: dict = field(default_factory=dict, repr=False)
    evaluations: int = 0

    def __post_init__(self):
        if self.direction not in ("best", "worst"):
            raise ConfigError("direction must be 'best' or 'worst'")

    def _better(self, v1: float, v2: float) -> bool:
        return v1 > v2 if self.direction == "best" else v1 < v2

    def threshold(self, c: int) -> float:
        """Value a new subset of cardinality c must beat to enter."""
        lst = self.entries.get(c, [])
        if len(lst) < self.k:
            return -math.inf if self.direction == "best" else math.inf
        return lst[-1][0]

    def offer(self, value: float, indices: tuple[int, ...]) -> bool:
        """Insert if among the top-K at its cardinality; first-seen wins ties."""
        if value != value:  # NaN
            return False
        c = len(indices)
        keys = self._keys.setdefault(c, set())
        if indices in keys:
            return False
        lst = self.entries.setdefault(c, [])
        if len(lst) >= self.k and not self._better(value, lst[-1][0]):
            return False
        sign = -1.0 if self.direction == "best" else 1.0
        pos = bisect.bisect_right([sign * v for v, _ in lst], sign * value)
        lst.insert(pos, (float(value), tuple(indices)))
        keys.add(indices)
        if len(lst) > self.k:
            _, dropped = lst.pop()
            keys.discard(dropped)
        return True

    def offer_batch(self, masks: np.ndarray, values: np.ndarray) -> int:
        cards = masks.sum(axis=1)
        thr = np.array([self.threshold(int(c)) for c in range(self.n + 1)])
        if self.direction == "best":
            cand = np.flatnonzero(values > thr[cards])
        else:
            cand = np.flatnonzero(values < thr[cards])
        added = 0
        for i in cand:
            added += self.offer(float(values[i]), tuple(np.flatnonzero(masks[i]).tolist()))
        return added

    def cardinalities(self) -> list[int]:
        return sorted(c for c, lst in self.entries.items() if lst)

    def top_value(self, c: int) -> float:
        lst = self.entries.get(c)
        return lst[0][0] if lst else math.nan

    def top_values(self) -> np.ndarray:
        """Array indexed by cardinality 1..n (NaN where nothing was found)."""
        return np.array([self.top_value(c) for c in range(1, self.n + 1)])

    def top_mask(self, c: int) -> np.ndarray | None:
        lst = self.entries.get(c)
        if not lst:
            return None
        m = np.zeros(self.n, dtype=bool)
        m[list(lst[0][1])] = True
        return m

    def masks(self, c: int) -> list[np.ndarray]:
        out = []
        for _, idx in self.entries.get(c, []):
            m = np.zeros(self.n, dtype=bool)
            m[list(idx)] = True
            out.append(m)
        return out

    def missing(self) -> list[int]:
        return [c for c in range(1, self.n + 1) if not self.entries.get(c)]

    def to_json(self, topics: Sequence[str] | None = None) -> str:
        def label(i):
            return topics[i] if topics is not None else i

        body = {
            "n": self.n,
            "direction": self.direction,
            "k": self.k,
            "evaluations": self.evaluations,
            "cardinalities": {
                str(c): [{"value": v, "topics": [label(i) for i in idx]}
                         for v, idx in self.entries[c]]
                for c in self.cardinalities()
            },
        }
        return json.dumps(body, indent=1, sort_keys=True)


def merge_archives(archives: Sequence[ParetoArchive]) -> ParetoArchive:
    """Union of several runs' archives, keeping per-cardinality extremes."""
    if not archives:
        raise ConfigError("nothing to merge")
    first = archives[0]
    out = ParetoArchive(first.n, first.direction, first.k)
    for arc in archives:
        if (arc.n, arc.direction) != (first.n, first.direction):
            raise DataError("archives differ in topic count or direction")
        for c in arc.cardinalities():
            for v, idx in arc.entries[c]:
                out.offer(v, idx)
        out.evaluations += arc.evaluations
    return out


# ---------------------------------------------------------------- NSGA-II


@dataclass(frozen=True)
class SearchParams:
    population_size: int = 2000
    max_evaluations: int = 10_000_000
    mutation_prob: float = 0.3
    crossover_prob: float = 0.7
    correlation_kind: str = "kendall"
    direction: str = "best"
    seed: int = 0
    archive_k: int = 10
    bit_flip_prob: float | None = None  # per-topic flip rate, default 1/n
    workers: int = 1

    def validate(self, n: int):
        if self.population_size < n:
            raise ConfigError(f"population_size {self.population_size} < topics {n}")
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        for name in ("mutation_prob", "crossover_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.bit_flip_prob is not None and not 0.0 <= self.bit_flip_prob <= 1.0:
            raise ConfigError("bit_flip_prob must lie in [0, 1]")
        if self.correlation_kind not in KINDS:
            raise ConfigError(f"unknown correlation kind {self.correlation_kind!r}")
        if self.direction not in ("best", "worst"):
            raise ConfigError("direction must be 'best' or 'worst'")
        if self.max_evaluations < self.population_size:
            raise ConfigError("max_evaluations must cover the initial population")
        if self.archive_k < 1:
            raise ConfigError("archive_k must be >= 1")


def objectives(cards: np.ndarray, values: np.ndarray, direction: str):
    """Both objectives as minimization; undefined correlations rank last."""
    corr = np.where(np.isnan(values), np.inf, values)
    if direction == "best":
        return cards.astype(float), np.where(np.isnan(values), np.inf, -corr)
    return -cards.astype(float), corr


def nondominated_fronts(f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Front index (0 = non-dominated) of each point, both objectives minimized."""
    order = np.lexsort((f2, f1))
    front_min_f2: list[float] = []  # non-increasing? no: kept per front
    front_f1_at_min: list[float] = []
    rank = np.empty(f1.size, dtype=np.int64)
    for idx in order:
        a, b = f1[idx], f2[idx]
        # first front that does not dominate (a, b); domination is monotone in k
        lo, hi = 0, len(front_min_f2)
        while lo < hi:
            mid = (lo + hi) // 2
            mf2 = front_min_f2[mid]
            if mf2 < b or (mf2 == b and front_f1_at_min[mid] < a):
                lo = mid + 1
            else:
                hi = mid
        rank[idx] = lo
        if lo == len(front_min_f2):
            front_min_f2.append(b)
            front_f1_at_min.append(a)
        elif b < front_min_f2[lo]:
            front_min_f2[lo] = b
            front_f1_at_min[lo] = a
    return rank


def crowding_distance(f1: np.ndarray, f2: np.ndarray, fronts: np.ndarray) -> np.ndarray:
    """Standard NSGA-II crowding distance, computed front by front (vectorized)."""
    dist = np.zeros(f1.size)
    for f in (f1, f2):
        finite = np.where(np.isfinite(f), f, np.nan)
        order = np.lexsort((f, fronts))
        fr = fronts[order]
        fv = finite[order]
        start = np.ones(f.size, dtype=bool)
        start[1:] = fr[1:] != fr[:-1]
        end = np.ones(f.size, dtype=bool)
        end[:-1] = fr[1:] != fr[:-1]
        # per-front span
        front_ids = fr
        fmin = np.full(fronts.max() + 1, np.nan)
        fmax = np.full(fronts.max() + 1, np.nan)
        fmin[fr[start]] = fv[start]
        fmax[fr[end]] = fv[end]
        span = fmax[front_ids] - fmin[front_ids]
        gap = np.zeros(f.size)
        inner = ~(start | end)
        nxt = np.roll(fv, -1)
        prv = np.roll(fv, 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = (nxt - prv) / span
        gap[inner] = np.where(np.isfinite(g[inner]), g[inner], 0.0)
        gap[start | end] = np.inf
        d = np.empty(f.size)
        d[order] = gap
        dist += d
    return dist


def _tournament(rank: np.ndarray, crowd: np.ndarray, count: int,
                rng: np.random.Generator) -> np.ndarray:
    a = rng.integers(0, rank.size, count)
    b = rng.integers(0, rank.size, count)
    coin = rng.random(count) < 0.5
    a_better = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
    b_better = (rank[b] < rank[a]) | ((rank[a] == rank[b]) & (crowd[b] > crowd[a]))
    return np.where(a_better, a, np.where(b_better, b, np.where(coin, a, b)))


def initial_population(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Random masks whose cardinalities cycle through 1..n."""
    keys = rng.random((size, n))
    cards = np.arange(size) % n + 1
    order = np.argsort(keys, axis=1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(n)[None, :].repeat(size, 0), axis=1)
    return ranks < cards[:, None]


def _make_offspring(pop: np.ndarray, rank, crowd, params: SearchParams, bit_prob: float,
                    rng: np.random.Generator, count: int) -> np.ndarray:
    n_pairs = (count + 1) // 2
    parents = _tournament(rank, crowd, 2 * n_pairs, rng)
    pa = pop[parents[0::2]]
    pb = pop[parents[1::2]]
    do_cross = rng.random(n_pairs) < params.crossover_prob
    c_and = np.where(do_cross[:, None], pa & pb, pa)
    c_or = np.where(do_cross[:, None], pa | pb, pb)
    empty = ~c_and.any(axis=1)
    c_and[empty] = pa[empty]
    kids = np.empty((2 * n_pairs, pop.shape[1]), dtype=bool)
    kids[0::2] = c_and
    kids[1::2] = c_or
    kids = kids[:count]
    do_mut = rng.random(count) < params.mutation_prob
    n_mut = int(do_mut.sum())
    if n_mut:
        flips = rng.random((n_mut, pop.shape[1])) < bit_prob
        mutated = kids[do_mut] ^ flips
        bad = np.flatnonzero(~mutated.any(axis=1))
        src = kids[do_mut]
        for i in bad:
            mutated[i] = mutate(src[i], bit_prob, rng)
        kids[do_mut] = mutated
    return kids


def _survive(f1, f2, size):
    fronts = nondominated_fronts(f1, f2)
    crowd = crowding_distance(f1, f2, fronts)
    order = np.lexsort((-crowd, fronts))[:size]
    return order, fronts, crowd


def nsga2_search(a: ApMatrix | np.ndarray, params: SearchParams = SearchParams(),
                 progress: Callable[[int, ParetoArchive], None] | None = None,
                 evaluator: SubsetEvaluator | None = None) -> ParetoArchive:
    """Run the evolutionary search and return the per-cardinality archive.

    The result depends only on the matrix and ``params`` (including the
    seed); ``params.workers`` changes speed, never output.
    """
    values = a.values if isinstance(a, ApMatrix) else np.asarray(a, dtype=float)
    n = values.shape[1]
    params.validate(n)
    ev = evaluator or SubsetEvaluator(values, params.correlation_kind, params.workers)
    rng = np.random.default_rng(params.seed)
    bit_prob = params.bit_flip_prob if params.bit_flip_prob is not None else 1.0 / n
    archive = ParetoArchive(n, params.direction, params.archive_k)

    size = params.population_size
    pop = initial_population(n, size, rng)
    vals = ev(pop)
    used = size
    archive.offer_batch(pop, vals)
    f1, f2 = objectives(pop.sum(axis=1), vals, params.direction)
    _, rank, crowd = _survive(f1, f2, size)
    gen = 0
    while used < params.max_evaluations:
        count = min(size, params.max_evaluations - used)
        kids = _make_offspring(pop, rank, crowd, params, bit_prob, rng, count)
        kid_vals = ev(kids)
        used += count
        archive.offer_batch(kids, kid_vals)
        allpop = np.vstack([pop, kids])
        allvals = np.concatenate([vals, kid_vals])
        f1, f2 = objectives(allpop.sum(axis=1), allvals, params.direction)
        keep, fronts, crowd_all = _survive(f1, f2, size)
        pop, vals = allpop[keep], allvals[keep]
        # rank/crowding of survivors, reused for the next tournament
        rank, crowd = fronts[keep], crowd_all[keep]
        gen += 1
        if progress is not None:
            progress(gen, archive)
    # the full set is always the (unique) subset at cardinality n
    full = np.ones((1, n), dtype=bool)
    archive.offer_batch(full, ev(full))
    archive.evaluations = used
    return archive


def exhaustive_extremes(a: ApMatrix | np.ndarray, kind: str = "kendall",
                        max_topics: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Best and worst correlation per cardinality over all 2^n - 1 subsets."""
    values = a.values if isinstance(a, ApMatrix) else np.asarray(a, dtype=float)
    n = values.shape[1]
    if n > max_topics:
        raise ConfigError(f"exhaustive enumeration limited to {max_topics} topics")
    codes = np.arange(1, 2**n, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    vals = SubsetEvaluator(values, kind)(masks)
    cards = masks.sum(axis=1)
    best = np.full(n, np.nan)
    worst = np.full(n, np.nan)
    for c in range(1, n + 1):
        v = vals[(cards == c) & ~np.isnan(vals)]
        if v.size:
            best[c - 1] = v.max()
            worst[c - 1] = v.min()
    return best, worst


# ---------------------------------------------------------------- average series


@dataclass(frozen=True)
class AverageSeries:
    cardinality: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    p01: np.ndarray
    p99: np.ndarray
    reps: int

    @property
    def stderr(self) -> np.ndarray:
        return self.std / math.sqrt(self.reps)


def random_subsets(n: int, c: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``reps`` uniform c-subsets of range(n) as boolean masks."""
    keys = rng.random((reps, n))
    kth = np.partition(keys, c - 1, axis=1)[:, c - 1 : c]
    return keys <= kth


def average_series(a: ApMatrix | np.ndarray, reps: int = 1000, kind: str = "kendall",
                   rng: np.random.Generator | int | None = 0,
                   evaluator: SubsetEvaluator | None = None) -> AverageSeries:
    """Mean and 1st/99th percentile correlation of random subsets at each cardinality.

    Undefined correlations (constant subset MAP) count as the -2 sentinel.
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    rng = np.random.default_rng(rng)
    values = a.values if isinstance(a, ApMatrix) else np.asarray(a, dtype=float)
    n = values.shape[1]
    ev = evaluator or SubsetEvaluator(values, kind)
    mean, std, p01, p99 = (np.empty(n) for _ in range(4))
    for c in range(1, n + 1):
        v = ev(random_subsets(n, c, reps, rng))
        v = np.where(np.isnan(v), SENTINEL, v)
        mean[c - 1] = v.mean()
        std[c - 1] = v.std(ddof=1) if reps > 1 else 0.0
        p01[c - 1], p99[c - 1] = np.percentile(v, [1, 99])
    return AverageSeries(np.arange(1, n + 1), mean, std, p01, p99, reps)


def write_series_csv(best: ParetoArchive | None, worst: ParetoArchive | None,
                     avg: AverageSeries | None, n: int, stream: TextIO | None = None,
                     fraction: bool = False) -> str | None:
    """cardinality,best,worst,mean,p01,p99 (blank where unavailable)."""
    out = io.StringIO() if stream is None else stream
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["fraction" if fraction else "cardinality", "best", "worst", "mean", "p01", "p99"])

    def fmt(v):
        return "" if v is None or (isinstance(v, float) and math.isnan(v)) else "%.12g" % v

    for c in range(1, n + 1):
        row = [("%.12g" % (c / n)) if fraction else str(c)]
        row.append(fmt(best.top_value(c)) if best else "")
        row.append(fmt(worst.top_value(c)) if worst else "")
        if avg is not None:
            row += [fmt(avg.mean[c - 1]), fmt(avg.p01[c - 1]), fmt(avg.p99[c - 1])]
        else:
            row += ["", "", ""]
        w.writerow(row)
    return out.getvalue() if stream is None else None


# ---------------------------------------------------------------- stability


def counter_bounds(n: int, c: int) -> tuple[int, int]:
    """Min and max overlap of a c-subset with a (c+1)-subset of n topics."""
    lo = 0 if c <= n // 2 - 1 else 2 * c + 1 - n
    return max(lo, 0), c


def topk_counter_bounds(n: int, c: int, p: int) -> tuple[int, int]:
    """Min and max summed overlap of p-1 c-subsets with a first c-subset."""
    lo = (2 * c - n) * (p - 1) if c > n // 2 else 0
    return lo, c * (p - 1)


def stability_single(series: Mapping[int, np.ndarray] | Sequence, n: int | None = None) -> float:
    """Overlap of consecutive best (or worst) subsets, scaled to [0, 1].

    ``series`` maps cardinality c (1..n-1 at least) to a mask.
    """
    if not isinstance(series, Mapping):
        series = {i + 1: m for i, m in enumerate(series)}
    masks = {c: np.asarray(m, dtype=bool) for c, m in series.items()}
    if n is None:
        n = len(next(iter(masks.values())))
    num = den = 0
    for c in range(1, n):
        if c not in masks or c + 1 not in masks:
            raise DataError(f"missing subset at cardinality {c} or {c + 1}")
        lo, hi = counter_bounds(n, c)
        actual = int(np.count_nonzero(masks[c] & masks[c + 1]))
        num += actual - lo
        den += hi - lo
    return num / den if den else 1.0


def stability_topk(series: Mapping[int, Sequence[np.ndarray]], n: int, p: int = 10) -> float:
    """Overlap of the 2nd..p-th subsets with the 1st one at each cardinality, scaled to [0, 1].

    Cardinalities with fewer than p subsets are skipped with a warning.
    """
    if p < 2:
        raise ConfigError("p must be >= 2")
    num = den = 0
    short = []
    for c in range(1, n + 1):
        sets = series.get(c, [])
        if len(sets) < p:
            short.append(c)
            continue
        first = np.asarray(sets[0], dtype=bool)
        actual = sum(int(np.count_nonzero(first & np.asarray(s, dtype=bool))) for s in sets[1:p])
        lo, hi = topk_counter_bounds(n, c, p)
        num += actual - lo
        den += hi - lo
    if short:
        warnings.warn(f"fewer than {p} subsets at cardinalities {short}; skipped",
                      stacklevel=2)
    return num / den if den else 1.0


# ---------------------------------------------------------------- synthetic data


def synth_matrix(strategy: str, m: int, n: int, source: ApMatrix | None = None,
                 mu: float = 0.258, sigma: float = 0.31,
                 rng: np.random.Generator | int | None = 0) -> ApMatrix:
    """Synthetic m x n matrix: clipped gaussian cells or resampled source cells."""
    if m < 1 or n < 1:
        raise ConfigError("matrix dimensions must be positive")
    rng = np.random.default_rng(rng)
    if strategy == "gaussian":
        if sigma < 0:
            raise ConfigError("sigma must be non-negative")
        vals = np.clip(rng.normal(mu, sigma, (m, n)), 0.0, 1.0)
    elif strategy == "resample":
        if source is None or source.values.size == 0:
            raise ConfigError("resample needs a non-empty source matrix")
        vals = rng.choice(source.values.ravel(), size=(m, n), replace=True)
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    return ApMatrix([f"s{i + 1}" for i in range(m)], [f"t{j + 1}" for j in range(n)], vals)


def all_subsets(n: int, c: int) -> Iterable[tuple[int, ...]]:
    return combinations(range(n), c)
