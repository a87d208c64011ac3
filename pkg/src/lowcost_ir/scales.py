"""Fine-grained judgements, relevance-scale cuts, agreement-driven cut search and
evaluation of transformed judgements by system-ranking correlation."""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .association import alpha_from_coincidence, correlation, default_level
from .collection import Metric, Qrels, RunSet, topic_scores, topic_sort_key
from .errors import ConfigError, DataError, DegenerateError, ParseError

AGGREGATES = ("mean", "median", "majority")
FAMILIES = ("H_t+a1", "H_a+t1", "Tw_alpha1", "H2", "D_a+t2", "D_t+a2")
TARGET_FAMILIES = ("H2", "D_a+t2", "D_t+a2")
UNJUDGED = ("assume", "drop", "error")
JUDGEMENT_HEADER = ("worker_id", "topic", "doc", "value", "position", "attempt")


# ---------------------------------------------------------------- judgements


@dataclass(frozen=True)
class JudgementTable:
    """Worker judgements of (topic, doc) pairs on an integer scale (lo, hi)."""

    workers: tuple[str, ...]
    topics: tuple[str, ...]
    docs: tuple[str, ...]
    values: np.ndarray
    positions: np.ndarray
    attempts: np.ndarray
    scale: tuple[int, int]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.workers)
        vals = np.asarray(self.values, dtype=np.int64)
        pos = np.asarray(self.positions, dtype=np.int64)
        att = np.asarray(self.attempts, dtype=np.int64)
        if not (len(self.topics) == len(self.docs) == vals.size == pos.size == att.size == n):
            raise DataError("judgement columns differ in length")
        lo, hi = self.scale
        if lo >= hi:
            raise DataError(f"bad scale {self.scale}")
        if n and (vals.min() < lo or vals.max() > hi):
            raise DataError(f"judgement value outside scale {self.scale}")
        seen: dict[str, list[int]] = {}
        keys = set()
        for i, (w, t, d) in enumerate(zip(self.workers, self.topics, self.docs)):
            if (w, t, d) in keys:
                raise DataError(f"duplicate judgement by worker {w!r} on ({t}, {d})")
            keys.add((w, t, d))
            seen.setdefault(t, []).append(i)
        for a in (vals, pos, att):
            a.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "attempts", att)
        self._index.clear()
        self._index.update({t: np.array(ix) for t, ix in seen.items()})

    @property
    def levels(self) -> int:
        return self.scale[1] - self.scale[0] + 1

    def topic_list(self) -> tuple[str, ...]:
        return tuple(sorted(self._index, key=topic_sort_key))

    def rows(self, topic: str) -> np.ndarray:
        return self._index.get(topic, np.zeros(0, dtype=np.int64))

    def __len__(self):
        return len(self.workers)

    @classmethod
    def from_records(cls, records: Iterable[Sequence], scale: tuple[int, int]) -> "JudgementTable":
        cols = list(zip(*records)) or [()] * 6
        return cls(tuple(map(str, cols[0])), tuple(map(str, cols[1])), tuple(map(str, cols[2])),
                   np.array(cols[3], dtype=np.int64), np.array(cols[4], dtype=np.int64),
                   np.array(cols[5], dtype=np.int64), scale)

    @classmethod
    def from_qrels(cls, q: Qrels, worker: str = "expert") -> "JudgementTable":
        """One judgement per qrels entry, all by the same worker."""
        if not q.has_scale:
            raise DataError("qrels carry no scale")
        recs = [(worker, t, d, g, 1, 1) for t in q.topics for d, g in sorted(q.for_topic(t).items())]
        return cls.from_records(recs, q.scale)

    def to_csv(self, stream: TextIO | None = None) -> str | None:
        out = io.StringIO() if stream is None else stream
        w = csv.writer(out, lineterminator="\n")
        w.writerow(JUDGEMENT_HEADER)
        for i in range(len(self)):
            w.writerow([self.workers[i], self.topics[i], self.docs[i], int(self.values[i]),
                        int(self.positions[i]), int(self.attempts[i])])
        return out.getvalue() if stream is None else None


def parse_judgements(stream, scale: tuple[int, int] | None = None, source=None) -> JudgementTable:
    """Read the judgement CSV; the scale defaults to the observed [min, max]."""
    text = stream if isinstance(stream, str) else stream.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != JUDGEMENT_HEADER:
        raise ParseError("judgement CSV needs header " + ",".join(JUDGEMENT_HEADER), 1, source)
    recs = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 6:
            raise ParseError(f"expected 6 fields, got {len(row)}", line_no, source)
        try:
            value, pos, att = int(row[3]), int(row[4]), int(row[5])
        except ValueError:
            raise ParseError("value, position and attempt must be integers", line_no, source) from None
        recs.append((row[0].strip(), row[1].strip(), row[2].strip(), value, pos, att))
    if scale is None:
        if not recs:
            raise DataError("empty judgement table needs an explicit scale")
        vals = [r[3] for r in recs]
        scale = (min(vals), max(vals))
    return JudgementTable.from_records(recs, scale)


def read_judgements(path: str, scale: tuple[int, int] | None = None) -> JudgementTable:
    with open(path, encoding="utf-8") as fh:
        return parse_judgements(fh, scale, source=path)


def aggregate(values, fn: str = "mean") -> float:
    """mean, lower median, or modal value with the lowest value winning ties."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise DataError("cannot aggregate an empty judgement set")
    if fn == "mean":
        return float(v.mean())
    if fn == "median":
        return float(v[(v.size - 1) // 2])
    if fn == "majority":
        vals, counts = np.unique(v, return_counts=True)
        return float(vals[int(np.argmax(counts))])
    raise ConfigError(f"unknown aggregate {fn!r}; choose from {AGGREGATES}")


def default_aggregate(levels: int) -> str:
    """majority for binary scales, median up to 10 levels, mean for finer scales."""
    if levels == 2:
        return "majority"
    return "median" if levels <= 10 else "mean"


# ---------------------------------------------------------------- cuts


def count_cuts(source_levels: int, target_levels: int) -> int:
    if source_levels < 2 or target_levels < 2:
        raise ConfigError("scales need at least two levels")
    if target_levels >= source_levels:
        raise ConfigError("target scale must be coarser than the source scale")
    return math.comb(source_levels - 1, target_levels - 1)


def iter_cuts(source_levels: int, target_levels: int, lo: int = 0):
    """All cut tuples in lexicographic order; points lie in [lo, lo + source_levels - 1)."""
    count_cuts(source_levels, target_levels)
    return itertools.combinations(range(lo, lo + source_levels - 1), target_levels - 1)


def cut_array(source_levels: int, target_levels: int, lo: int = 0) -> np.ndarray:
    n = count_cuts(source_levels, target_levels)
    flat = np.fromiter(itertools.chain.from_iterable(iter_cuts(source_levels, target_levels, lo)),
                       dtype=np.int64, count=n * (target_levels - 1))
    return flat.reshape(n, target_levels - 1)


@dataclass(frozen=True)
class CutSpec:
    """Cut points c1 < ... < c_{T-1}; a value maps to the number of points strictly below it."""

    source: tuple[int, int]
    target_levels: int
    points: tuple[int, ...]

    def __post_init__(self):
        lo, hi = self.source
        pts = tuple(int(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) != self.target_levels - 1:
            raise ConfigError(f"a {self.target_levels}-level target needs {self.target_levels - 1} cut points")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("cut points must be strictly increasing")
        if pts and (pts[0] < lo or pts[-1] >= hi):
            raise ConfigError(f"cut points must lie in [{lo}, {hi})")

    @property
    def label(self) -> str:
        return "-".join(map(str, self.points))


def apply_cut(value, cut: CutSpec):
    """Target level(s) of source value(s); works on scalars and arrays."""
    v = np.asarray(value, dtype=float)
    lo, hi = cut.source
    if np.any(v < lo) or np.any(v > hi) or np.any(np.isnan(v)):
        raise DataError(f"value outside source scale {cut.source}")
    levels = np.searchsorted(np.asarray(cut.points, dtype=float), v, side="left")
    return int(levels) if levels.ndim == 0 else levels.astype(np.int64)


def _levels(values: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    """(B, N) target levels of N source values under B cuts."""
    out = np.zeros((cuts.shape[0], values.size), dtype=np.int8)
    for k in range(cuts.shape[1]):
        out += values[None, :] > cuts[:, k, None]
    return out


# ---------------------------------------------------------------- agreement kernels


def _pair_alpha(lu: np.ndarray, lw: np.ndarray, t: int, level: str) -> np.ndarray:
    """Alpha per cut between two coders; lu is (B, N), lw is (B, N) or (N,)."""
    b, n = lu.shape
    if n == 0:
        return np.full(b, np.nan)
    lw = np.broadcast_to(lw, lu.shape)
    key = (np.arange(b, dtype=np.int64)[:, None] * (t * t) + lu.astype(np.int64) * t + lw).ravel()
    counts = np.bincount(key, minlength=b * t * t).reshape(b, t, t).astype(float)
    o = counts + counts.transpose(0, 2, 1)
    return alpha_from_coincidence(o, np.arange(t, dtype=float), level)


def _unit_counts(levels: np.ndarray, unit: np.ndarray, n_units: int, t: int) -> np.ndarray:
    """(B, U, T) counts of target levels per unit."""
    b = levels.shape[0]
    key = ((np.arange(b, dtype=np.int64)[:, None] * n_units + unit[None, :]) * t
           + levels.astype(np.int64)).ravel()
    return np.bincount(key, minlength=b * n_units * t).reshape(b, n_units, t)


def _multi_alpha(levels: np.ndarray, unit: np.ndarray, n_units: int, t: int, level: str) -> np.ndarray:
    n = _unit_counts(levels, unit, n_units, t).astype(float)
    m = n.sum(axis=2)[0]
    keep = m >= 2
    if not keep.any():
        return np.full(levels.shape[0], np.nan)
    n, w = n[:, keep], 1.0 / (m[keep] - 1.0)
    o = np.einsum("bux,buy,u->bxy", n, n, w)
    diag = np.einsum("bux,u->bx", n, w)
    o[:, np.arange(t), np.arange(t)] -= diag
    return alpha_from_coincidence(o, np.arange(t, dtype=float), level)


def _aggregate_levels(levels: np.ndarray, unit: np.ndarray, n_units: int, t: int, fn: str) -> np.ndarray:
    """Per-unit aggregate of target levels, (B, U)."""
    n = _unit_counts(levels, unit, n_units, t)
    if fn == "majority":
        return np.argmax(n, axis=2).astype(np.int8)
    if fn == "median":
        m = n.sum(axis=2)
        need = (m - 1) // 2 + 1
        return np.argmax(np.cumsum(n, axis=2) >= need[..., None], axis=2).astype(np.int8)
    raise ConfigError("transformed judgements aggregate by median or majority only")


# ---------------------------------------------------------------- cut search


@dataclass(frozen=True)
class TransformMethod:
    family: str
    per_topic: bool = True
    source_agg: str | None = None  # aggregation on the source scale
    target_agg: str | None = None  # aggregation of transformed judgements
    level: str | None = None  # alpha level of measurement on the target scale
    unjudged: str = "assume"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.unjudged not in UNJUDGED:
            raise ConfigError(f"unjudged policy must be one of {UNJUDGED}")
        for a in (self.source_agg, self.target_agg):
            if a is not None and a not in AGGREGATES:
                raise ConfigError(f"unknown aggregate {a!r}")
        if self.target_agg == "mean":
            raise ConfigError("transformed judgements aggregate by median or majority only")

    @property
    def needs_target(self) -> bool:
        return self.family in TARGET_FAMILIES

    @property
    def name(self) -> str:
        return self.family


@dataclass(frozen=True)
class CutResult:
    topic: str  # "*" for a collection-wide cut
    cut: CutSpec
    alpha: float
    tied: np.ndarray  # every cut sharing the best alpha, lexicographic order

    @property
    def interval(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(self.tied.min(axis=0).tolist()), tuple(self.tied.max(axis=0).tolist())


@dataclass(frozen=True)
class CutSearch:
    method: TransformMethod
    cuts: np.ndarray  # (B, T-1)
    results: dict  # topic -> CutResult
    trace: dict  # topic -> (B,) alpha per cut
    skipped_topics: tuple[str, ...]
    metadata: dict

    def cut_for(self, topic: str) -> CutSpec:
        r = self.results.get(topic) or self.results.get("*")
        if r is None:
            raise DataError(f"no cut selected for topic {topic!r}")
        return r.cut

    def trace_csv(self, stream: TextIO | None = None, fmt: str = "%.6g") -> str | None:
        out = io.StringIO() if stream is None else stream
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "topic", "cut", "alpha"])
        labels = ["-".join(map(str, c)) for c in self.cuts.tolist()]
        for topic, alphas in self.trace.items():
            for lab, a in zip(labels, alphas):
                w.writerow([self.method.name, topic, lab, "nan" if np.isnan(a) else fmt % a])
        return out.getvalue() if stream is None else None


@dataclass
class _Topic:
    docs: list[str]
    doc_of: np.ndarray  # doc index per judgement
    worker_of: np.ndarray  # worker index per judgement
    values: np.ndarray
    n_workers: int


def _topic_data(table: JudgementTable, topic: str) -> _Topic:
    rows = table.rows(topic)
    docs = sorted({table.docs[i] for i in rows})
    dix = {d: k for k, d in enumerate(docs)}
    workers = sorted({table.workers[i] for i in rows})
    wix = {w: k for k, w in enumerate(workers)}
    return _Topic(docs, np.array([dix[table.docs[i]] for i in rows], dtype=np.int64),
                  np.array([wix[table.workers[i]] for i in rows], dtype=np.int64),
                  table.values[rows].astype(float), len(workers))


def _target_levels(target: Qrels, topic: str, docs: Sequence[str], t: int, policy: str,
                   include_target_only: bool):
    """(doc list, target level per doc, mask of docs present in the source)."""
    grades = target.for_topic(topic)
    for g in grades.values():
        if not 0 <= g < t:
            raise DataError(f"target grade {g} outside 0..{t - 1}")
    rows = []
    for d in docs:
        if d in grades:
            rows.append((d, grades[d], True))
        elif policy == "assume":
            rows.append((d, 0, True))
        elif policy == "error":
            raise DataError(f"document {d!r} of topic {topic} is unjudged in the target data")
    if include_target_only and policy == "assume":
        in_source = set(docs)
        rows += [(d, grades[d], False) for d in sorted(grades) if d not in in_source]
    return ([r[0] for r in rows], np.array([r[1] for r in rows], dtype=np.int8),
            np.array([r[2] for r in rows], dtype=bool))


def _chunks(b: int, width: int, budget: int = 4_000_000):
    step = max(1, budget // max(1, width))
    for s in range(0, b, step):
        yield slice(s, min(b, s + step))


def _topic_alpha(method: TransformMethod, data: _Topic, cuts: np.ndarray, t: int, lo: int,
                 levels_of_scale: int, target: Qrels | None, topic: str) -> np.ndarray:
    level = method.level or default_level(t)
    src_agg = method.source_agg or default_aggregate(levels_of_scale)
    tgt_agg = method.target_agg or ("majority" if t == 2 else "median")
    fam = method.family
    b = cuts.shape[0]
    out = np.full(b, np.nan)

    if fam == "Tw_alpha1":
        for sl in _chunks(b, data.values.size * t):
            out[sl] = _multi_alpha(_levels(data.values, cuts[sl]), data.doc_of, len(data.docs), t, level)
        return out

    if fam in ("D_a+t2", "D_t+a2"):
        docs, tgt, present = _target_levels(target, topic, data.docs, t, method.unjudged, True)
        if not docs:
            raise DataError(f"topic {topic}: no overlapping documents with target data")
        pos = {d: k for k, d in enumerate(docs)}
        # docs only judged in the target count as the lowest source value
        extra = np.flatnonzero(~present)
        keep = np.array([data.docs[k] in pos for k in data.doc_of], dtype=bool)
        vals = np.concatenate([data.values[keep], np.full(extra.size, float(lo))])
        unit = np.concatenate([np.array([pos[data.docs[k]] for k in data.doc_of[keep]], dtype=np.int64),
                               extra.astype(np.int64)])
        if fam == "D_a+t2":
            agg = np.array([aggregate(vals[unit == u], src_agg) for u in range(len(docs))])
            for sl in _chunks(b, agg.size):
                out[sl] = _pair_alpha(_levels(agg, cuts[sl]), tgt, t, level)
        else:
            for sl in _chunks(b, vals.size * t):
                lv = _aggregate_levels(_levels(vals, cuts[sl]), unit, len(docs), t, tgt_agg)
                out[sl] = _pair_alpha(lv, tgt, t, level)
        return out

    # HIT-centric families: one alpha per worker, averaged over workers
    per_worker = []
    if fam == "H2":
        docs, tgt, _ = _target_levels(target, topic, data.docs, t, method.unjudged, False)
        tgt_of = {d: g for d, g in zip(docs, tgt)}
    for w in range(data.n_workers):
        mine = np.flatnonzero(data.worker_of == w)
        if fam == "H2":
            mine = np.array([i for i in mine if data.docs[data.doc_of[i]] in tgt_of], dtype=np.int64)
            if mine.size == 0:
                continue
            ref = np.array([tgt_of[data.docs[data.doc_of[i]]] for i in mine], dtype=np.int8)
            vals = data.values[mine]
            alphas = np.empty(b)
            for sl in _chunks(b, vals.size):
                alphas[sl] = _pair_alpha(_levels(vals, cuts[sl]), ref, t, level)
            per_worker.append(alphas)
            continue
        crowd_vals, crowd_unit, own = [], [], []
        for i in mine:
            others = np.flatnonzero((data.doc_of == data.doc_of[i]) & (data.worker_of != w))
            if others.size == 0:
                continue
            own.append(data.values[i])
            crowd_vals.append(data.values[others])
            crowd_unit.append(np.full(others.size, len(own) - 1))
        if not own:
            continue
        own_v = np.array(own)
        alphas = np.empty(b)
        commutes = tgt_agg == "median" or (tgt_agg == "majority" and t == 2)
        if fam == "H_a+t1" or commutes:
            # lower median (and binary majority with low ties) commutes with monotone cuts
            fn = src_agg if fam == "H_a+t1" else "median"
            ref_v = np.array([aggregate(c, fn) for c in crowd_vals])
            for sl in _chunks(b, own_v.size * 2):
                alphas[sl] = _pair_alpha(_levels(own_v, cuts[sl]), _levels(ref_v, cuts[sl]), t, level)
        else:
            cv, cu = np.concatenate(crowd_vals), np.concatenate(crowd_unit)
            for sl in _chunks(b, cv.size * t):
                ref_l = _aggregate_levels(_levels(cv, cuts[sl]), cu, own_v.size, t, tgt_agg)
                alphas[sl] = _pair_alpha(_levels(own_v, cuts[sl]), ref_l, t, level)
        per_worker.append(alphas)
    if per_worker:
        stack = np.vstack(per_worker)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out = np.nanmean(stack, axis=0)
    return out


def _best(cuts: np.ndarray, alphas: np.ndarray, topic: str, source, t: int) -> CutResult:
    if np.all(np.isnan(alphas)):
        raise DegenerateError(f"topic {topic}: alpha undefined for every cut")
    best = np.nanmax(alphas)
    tied_ix = np.flatnonzero(alphas == best)
    return CutResult(topic, CutSpec(source, t, tuple(cuts[tied_ix[0]].tolist())), float(best),
                     cuts[tied_ix])


def select_best_cut(method: TransformMethod, source: JudgementTable, target_levels: int,
                    target: Qrels | None = None, topics: Iterable[str] | None = None,
                    max_cuts: int | None = None, workers: int = 1) -> CutSearch:
    """Score every cut by alpha and keep the best, per topic or collection-wide.

    Ties go to the lexicographically lowest cut; every tied cut is reported.
    The collection-wide cut maximizes the mean alpha across topics.
    """
    if method.needs_target and target is None:
        raise ConfigError(f"{method.family} needs a target-scale dataset")
    lo, hi = source.scale
    levels = hi - lo + 1
    n = count_cuts(levels, target_levels)
    if max_cuts is not None and n > max_cuts:
        raise ConfigError(f"{n} cuts exceed the budget of {max_cuts}")
    cuts = cut_array(levels, target_levels, lo)
    wanted = list(topics) if topics is not None else list(source.topic_list())
    if not wanted:
        raise DataError("no topics to transform")

    skipped = []
    if method.needs_target:
        present = set(target.topics)
        skipped = [tp for tp in wanted if tp not in present]
        wanted = [tp for tp in wanted if tp in present]
        if not wanted:
            raise DataError("no overlapping documents with target data")

    def one(topic):
        data = _topic_data(source, topic)
        if not data.docs:
            raise DataError(f"topic {topic!r} has no judgements")
        return _topic_alpha(method, data, cuts, target_levels, lo, levels, target, topic)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            alphas = list(ex.map(one, wanted))
    else:
        alphas = [one(tp) for tp in wanted]
    trace = dict(zip(wanted, alphas))

    results = {}
    if method.per_topic:
        for tp, a in trace.items():
            results[tp] = _best(cuts, a, tp, source.scale, target_levels)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(np.vstack(alphas), axis=0)
        trace["*"] = mean
        results["*"] = _best(cuts, mean, "*", source.scale, target_levels)
    meta = {"family": method.family, "per_topic": method.per_topic,
            "level": method.level or default_level(target_levels),
            "source_agg": method.source_agg or default_aggregate(levels),
            "target_agg": method.target_agg or ("majority" if target_levels == 2 else "median"),
            "unjudged": method.unjudged, "leave_one_out": method.family in ("H_t+a1", "H_a+t1"),
            "cuts_scored": int(n)}
    return CutSearch(method, cuts, results, trace, tuple(skipped), meta)


def agreement_for_cuts(method: TransformMethod, source: JudgementTable, cuts: Sequence[CutSpec],
                       target: Qrels | None = None) -> dict[str, np.ndarray]:
    """Alpha of each given cut, per topic (used to report named cuts such as left/middle/right)."""
    if not cuts:
        raise ConfigError("no cuts given")
    t = cuts[0].target_levels
    arr = np.array([c.points for c in cuts], dtype=np.int64)
    lo, hi = source.scale
    out = {}
    topics = source.topic_list()
    if method.needs_target:
        if target is None:
            raise ConfigError(f"{method.family} needs a target-scale dataset")
        topics = [tp for tp in topics if tp in set(target.topics)]
    for tp in topics:
        out[tp] = _topic_alpha(method, _topic_data(source, tp), arr, t, lo, hi - lo + 1, target, tp)
    return out


def pooled_agreement(source: JudgementTable, target: Qrels, cuts: Sequence[CutSpec],
                     unjudged: str = "assume", level: str | None = None,
                     source_agg: str | None = None) -> np.ndarray:
    """Collection-level alpha of aggregate-then-transform judgements vs the target, per cut.

    All (topic, doc) units of the collection are pooled into one reliability table.
    """
    t = cuts[0].target_levels
    lo, hi = source.scale
    fn = source_agg or default_aggregate(hi - lo + 1)
    level = level or default_level(t)
    agg_vals, tgt = [], []
    topics = sorted(set(source.topic_list()) | set(target.topics), key=topic_sort_key)
    for tp in topics:
        data = _topic_data(source, tp)
        docs, lv, present = _target_levels(target, tp, data.docs, t, unjudged, True)
        for d, g, p in zip(docs, lv, present):
            if p:
                k = data.docs.index(d)
                agg_vals.append(aggregate(data.values[data.doc_of == k], fn))
            else:
                agg_vals.append(float(lo))
            tgt.append(g)
    if not agg_vals:
        raise DataError("no overlapping documents with target data")
    arr = np.array([c.points for c in cuts], dtype=np.int64)
    return _pair_alpha(_levels(np.array(agg_vals), arr), np.array(tgt, dtype=np.int8), t, level)


# ---------------------------------------------------------------- transformation


def transform_judgements(table: JudgementTable, cut: CutSpec | Mapping[str, CutSpec],
                         order: str = "a+t", agg: str | None = None) -> Qrels:
    """Per-document target grades: aggregate then transform, or transform then aggregate."""
    if order not in ("a+t", "t+a"):
        raise ConfigError("order must be 'a+t' or 't+a'")
    entries = {}
    t_levels = None
    for tp in table.topic_list():
        c = cut.get(tp) if isinstance(cut, Mapping) else cut
        if c is None:
            continue
        if c.source != table.scale:
            raise ConfigError("cut source scale differs from the judgement scale")
        t_levels = c.target_levels
        data = _topic_data(table, tp)
        for k, d in enumerate(data.docs):
            vals = data.values[data.doc_of == k]
            if order == "a+t":
                fn = agg or default_aggregate(table.levels)
                entries[(tp, d)] = apply_cut(aggregate(vals, fn), c)
            else:
                fn = agg or ("majority" if c.target_levels == 2 else "median")
                if fn == "mean":
                    raise ConfigError("transformed judgements aggregate by median or majority only")
                entries[(tp, d)] = int(aggregate(apply_cut(vals, c), fn))
    if t_levels is None:
        raise DataError("no topic received a cut")
    return Qrels(entries, (0, t_levels - 1))


def evaluate_transformation(transformed: Qrels, expert: Qrels, runs: RunSet,
                            metric="NDCG@10", kind: str = "kendall") -> float:
    """Correlation between system rankings by mean metric under the two qrels."""
    metric = Metric.parse(metric)
    shared = [tp for tp in runs.topics if tp in set(transformed.topics) and tp in set(expert.topics)]
    cols_a, cols_b = [], []
    for tp in shared:
        a = topic_scores(runs, transformed, tp, metric)
        b = topic_scores(runs, expert, tp, metric)
        if a is None or b is None:
            continue
        cols_a.append(a)
        cols_b.append(b)
    if not cols_a:
        raise DataError("no shared topic with relevant documents under both qrels")
    return correlation(kind, np.mean(cols_a, axis=0), np.mean(cols_b, axis=0))


# ---------------------------------------------------------------- synthetic data


def synth_judgements(cut_points: Sequence[int], docs_per_level: int = 15, judges: int = 10,
                     noise: float = 5.0, scale: tuple[int, int] = (0, 100), topic: str = "t1",
                     rng=0) -> tuple[JudgementTable, Qrels]:
    """Fine-grained judgements from a planted latent scale.

    A document of latent level x gets a base value strictly inside its planted
    interval (values <= c1 map to 0 and so on); every judge reports the base
    plus gaussian noise, rounded and clipped to the scale.
    """
    rng = np.random.default_rng(rng)
    lo, hi = scale
    bounds = [lo - 1, *cut_points, hi]
    recs, entries = [], {}
    doc = 0
    for x in range(len(bounds) - 1):
        a, b = bounds[x] + 1, bounds[x + 1]
        for _ in range(docs_per_level):
            base = rng.uniform(a, b)
            d = f"d{doc:04d}"
            doc += 1
            entries[(topic, d)] = x
            for j in range(judges):
                v = int(np.clip(np.rint(base + rng.normal(0.0, noise)), lo, hi))
                recs.append((f"w{j}", topic, d, v, 1 + (doc % 8), 1))
    return (JudgementTable.from_records(recs, scale),
            Qrels(entries, (0, len(cut_points))))
