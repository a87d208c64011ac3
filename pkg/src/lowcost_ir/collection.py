"""TREC run/qrels parsing, pooling, binarization and ApMatrix assembly."""

from __future__ import annotations

import io
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

import numpy as np

from .effectiveness import _gain, ap_batch, ndcg_batch
from .errors import ConfigError, DataError, ParseError
from .matrix import ApMatrix

DEFAULT_DEPTH = 1000


class ExcludedTopicWarning(UserWarning):
    """A topic was dropped because it has no relevant documents."""


def topic_sort_key(topic: str):
    """Numeric topics sort numerically, everything else lexicographically after."""
    return (0, int(topic), "") if topic.isdigit() else (1, 0, topic)


@dataclass(frozen=True)
class RunRecord:
    topic_id: str
    doc_id: str
    rank: int
    score: float
    run_tag: str


@dataclass(frozen=True)
class RunSet:
    """Ranked lists of several systems.

    ``docs[system][topic]`` and ``scores[system][topic]`` are parallel tuples in
    canonical order (descending score, doc id ascending on ties).
    """

    systems: tuple[str, ...]
    topics: tuple[str, ...]
    docs: Mapping[str, Mapping[str, tuple[str, ...]]]
    scores: Mapping[str, Mapping[str, tuple[float, ...]]]
    depth: int = DEFAULT_DEPTH
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def ranked(self, system: str, topic: str) -> tuple[str, ...]:
        return self.docs[system][topic]

    @property
    def num_systems(self) -> int:
        return len(self.systems)

    def restrict(self, systems: Iterable[str] | None = None,
                 topics: Iterable[str] | None = None,
                 depth: int | None = None) -> "RunSet":
        """Sub-RunSet on chosen systems/topics, optionally truncated further."""
        sys_t = tuple(self.systems if systems is None else systems)
        top_t = tuple(self.topics if topics is None else topics)
        d = self.depth if depth is None else depth
        if d < 1:
            raise ConfigError("depth must be >= 1")
        for s in sys_t:
            if s not in self.docs:
                raise DataError(f"unknown system {s!r}")
        docs = {s: {t: self.docs[s].get(t, ())[:d] for t in top_t} for s in sys_t}
        scores = {s: {t: self.scores[s].get(t, ())[:d] for t in top_t} for s in sys_t}
        return RunSet(sys_t, top_t, docs, scores, min(d, self.depth) if depth else self.depth)

    def records(self) -> Iterable[RunRecord]:
        for s in self.systems:
            for t in self.topics:
                for rank, (d, sc) in enumerate(zip(self.docs[s][t], self.scores[s][t]), 1):
                    yield RunRecord(t, d, rank, sc, s)

    def topic_index(self, topic: str) -> "TopicIndex":
        """Integer encoding of one topic's lists (cached)."""
        key = ("idx", topic)
        if key not in self._cache:
            self._cache[key] = TopicIndex.build(self, topic)
        return self._cache[key]


@dataclass(frozen=True)
class TopicIndex:
    """Per-topic integer view of a RunSet.

    ``ids[i, r]`` is the index into ``doc_ids`` of system i's document at rank
    r+1, or -1 past the end of the list; ``lengths[i]`` is the list length.
    """

    doc_ids: tuple[str, ...]
    ids: np.ndarray
    lengths: np.ndarray
    scores: np.ndarray

    @classmethod
    def build(cls, runs: RunSet, topic: str) -> "TopicIndex":
        lookup: dict[str, int] = {}
        m = len(runs.systems)
        lists = [runs.docs[s].get(topic, ()) for s in runs.systems]
        width = max((len(x) for x in lists), default=0)
        ids = np.full((m, width), -1, dtype=np.int64)
        scores = np.full((m, width), np.nan)
        lengths = np.zeros(m, dtype=np.int64)
        for i, (s, lst) in enumerate(zip(runs.systems, lists)):
            lengths[i] = len(lst)
            for r, d in enumerate(lst):
                ids[i, r] = lookup.setdefault(d, len(lookup))
            scores[i, : len(lst)] = runs.scores[s].get(topic, ())
        ids.setflags(write=False)
        return cls(tuple(lookup), ids, lengths, scores)

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    def membership(self, depth: int | None = None) -> np.ndarray:
        """Boolean (m, num_docs) matrix: system i retrieved doc j within depth."""
        ids = self.ids if depth is None else self.ids[:, :depth]
        out = np.zeros((ids.shape[0], self.num_docs), dtype=bool)
        rows, cols = np.nonzero(ids >= 0)
        out[rows, ids[rows, cols]] = True
        return out

    def rank_matrix(self, depth: int | None = None) -> np.ndarray:
        """(m, num_docs) 1-based rank of each doc per system, 0 if not retrieved."""
        ids = self.ids if depth is None else self.ids[:, :depth]
        out = np.zeros((ids.shape[0], self.num_docs), dtype=np.int64)
        rows, cols = np.nonzero(ids >= 0)
        out[rows, ids[rows, cols]] = cols + 1
        return out

    def lookup_values(self, per_doc: np.ndarray, depth: int | None = None,
                      fill: float = 0.0) -> np.ndarray:
        """Map a per-document vector onto the (m, depth) rank grid."""
        ids = self.ids if depth is None else self.ids[:, :depth]
        per_doc = np.asarray(per_doc)
        ext = np.append(per_doc, np.asarray(fill, dtype=per_doc.dtype))
        return ext[np.where(ids >= 0, ids, per_doc.size)]


# ---------------------------------------------------------------- parsing


def _as_lines(stream) -> Iterable[str]:
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


def parse_runs(stream, depth: int = DEFAULT_DEPTH, source=None,
               topics: Iterable[str] | None = None) -> RunSet:
    """Parse six-column TREC run lines (``topic Q0 doc rank score tag``).

    The rank column is validated but ignored for ordering.  ``topics`` may
    declare additional topics that map to empty lists.
    """
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    raw: dict[str, dict[str, dict[str, float]]] = {}
    order: list[str] = []
    for line_no, line in enumerate(_as_lines(stream), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise ParseError(f"expected 6 columns, got {len(parts)}", line_no, source)
        topic, _, doc, rank_s, score_s, tag = parts
        try:
            rank = int(rank_s)
        except ValueError:
            raise ParseError(f"non-integer rank {rank_s!r}", line_no, source) from None
        try:
            score = float(score_s)
        except ValueError:
            raise ParseError(f"non-numeric score {score_s!r}", line_no, source) from None
        if not np.isfinite(score):
            raise ParseError(f"non-finite score {score_s!r}", line_no, source)
        if rank < 0:
            raise ParseError(f"negative rank {rank}", line_no, source)
        if tag not in raw:
            raw[tag] = {}
            order.append(tag)
        per_topic = raw[tag].setdefault(topic, {})
        if doc in per_topic:
            raise ParseError(f"duplicate document {doc!r} for run {tag!r} topic {topic!r}",
                             line_no, source)
        per_topic[doc] = score
    return _assemble(order, raw, depth, topics)


def _assemble(order, raw, depth, topics=None) -> RunSet:
    all_topics = set(topics or ())
    for tag in order:
        all_topics.update(raw[tag])
    topic_t = tuple(sorted(all_topics, key=topic_sort_key))
    docs, scores = {}, {}
    for tag in order:
        docs[tag], scores[tag] = {}, {}
        for t in topic_t:
            items = sorted(raw[tag].get(t, {}).items(), key=lambda kv: (-kv[1], kv[0]))[:depth]
            docs[tag][t] = tuple(d for d, _ in items)
            scores[tag][t] = tuple(s for _, s in items)
    return RunSet(tuple(order), topic_t, docs, scores, depth)


def read_runs(paths: Iterable[str], depth: int = DEFAULT_DEPTH) -> RunSet:
    """Parse several run files into one RunSet (run tags must be unique)."""
    raw: dict = {}
    order: list[str] = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            part = parse_runs(fh, depth=max(depth, 1), source=str(path))
        for tag in part.systems:
            if tag in raw:
                raise DataError(f"run tag {tag!r} appears in more than one file")
            order.append(tag)
            raw[tag] = {t: dict(zip(part.docs[tag][t], part.scores[tag][t]))
                        for t in part.topics if part.docs[tag][t]}
    return _assemble(order, raw, depth)


def write_runs(runs: RunSet, stream: TextIO | None = None) -> str | None:
    """Serialize in canonical order; ranks are rewritten as 1..len."""
    out = io.StringIO() if stream is None else stream
    for rec in runs.records():
        out.write(f"{rec.topic_id} Q0 {rec.doc_id} {rec.rank} {rec.score!r} {rec.run_tag}\n")
    return out.getvalue() if stream is None else None


@dataclass(frozen=True)
class Qrels:
    """(topic, doc) -> integer grade, with the grade scale as (min, max)."""

    entries: Mapping[tuple[str, str], int]
    scale: tuple[int, int] | None = None
    _by_topic: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        by_topic: dict[str, dict[str, int]] = {}
        for (t, d), g in self.entries.items():
            by_topic.setdefault(t, {})[d] = int(g)
        self._by_topic.clear()
        self._by_topic.update(by_topic)
        if self.scale is None and self.entries:
            vals = list(self.entries.values())
            object.__setattr__(self, "scale", (min(vals), max(vals)))
        if self.scale is not None:
            lo, hi = self.scale
            for g in self.entries.values():
                if not lo <= g <= hi:
                    raise DataError(f"grade {g} outside scale {self.scale}")

    @property
    def has_scale(self) -> bool:
        return self.scale is not None

    @property
    def topics(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_topic, key=topic_sort_key))

    def for_topic(self, topic) -> Mapping[str, int]:
        return self._by_topic.get(str(topic), {})

    def num_relevant(self, topic, min_grade: int = 1) -> int:
        return sum(1 for g in self.for_topic(topic).values() if g >= min_grade)

    def __len__(self):
        return len(self.entries)

    def to_trec(self, stream: TextIO | None = None) -> str | None:
        out = io.StringIO() if stream is None else stream
        for t in self.topics:
            for d, g in sorted(self._by_topic[t].items()):
                out.write(f"{t} 0 {d} {g}\n")
        return out.getvalue() if stream is None else None


_INT_RE = re.compile(r"^[+-]?\d+$")


def parse_qrels(stream, source=None) -> Qrels:
    """Parse four-column TREC qrels lines (``topic iter doc grade``)."""
    entries: dict[tuple[str, str], int] = {}
    for line_no, line in enumerate(_as_lines(stream), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {len(parts)}", line_no, source)
        topic, _, doc, grade_s = parts
        if not _INT_RE.match(grade_s):
            raise ParseError(f"non-integer grade {grade_s!r}", line_no, source)
        grade = int(grade_s)
        key = (topic, doc)
        if key in entries and entries[key] != grade:
            raise ParseError(f"conflicting grades for {topic} {doc}", line_no, source)
        entries[key] = grade
    return Qrels(entries)


def read_qrels(path: str) -> Qrels:
    with open(path, encoding="utf-8") as fh:
        return parse_qrels(fh, source=str(path))


def binarize(q: Qrels, relevant_levels: Iterable[int]) -> Qrels:
    """Map grades in ``relevant_levels`` to 1 and every other grade to 0."""
    levels = {int(x) for x in relevant_levels}
    if not levels:
        raise ConfigError("relevant_levels must not be empty")
    if q.scale is not None:
        lo, hi = q.scale
        bad = [x for x in levels if not lo <= x <= hi]
        if bad:
            raise ConfigError(f"levels {sorted(bad)} outside scale {q.scale}")
    entries = {k: int(g in levels) for k, g in q.entries.items()}
    return Qrels(entries, (0, 1))


def parse_levels(text: str) -> set[int]:
    """``"1,2,3"`` -> {1, 2, 3}."""
    try:
        return {int(x) for x in text.split(",") if x.strip()}
    except ValueError:
        raise ConfigError(f"bad level list {text!r}") from None


# ---------------------------------------------------------------- pooling


def build_pool(runs: RunSet, pool_depth: int, multiset: bool = False):
    """Top-``pool_depth`` union per topic.

    Returns ``{topic: frozenset(docs)}``, or ``{topic: Counter(doc -> number of
    systems retrieving it)}`` when ``multiset`` is set.
    """
    if pool_depth < 1:
        raise ConfigError("pool_depth must be >= 1")
    if pool_depth > runs.depth:
        raise ConfigError(f"pool_depth {pool_depth} exceeds run depth {runs.depth}")
    pool = {}
    for t in runs.topics:
        c: Counter = Counter()
        for s in runs.systems:
            c.update(runs.docs[s][t][:pool_depth])
        pool[t] = c if multiset else frozenset(c)
    return pool


def pool_pairs(pool) -> set[tuple[str, str]]:
    """Flatten a pool into (topic, doc) pairs."""
    return {(t, d) for t, docs in pool.items() for d in docs}


# ---------------------------------------------------------------- ApMatrix


@dataclass(frozen=True)
class Metric:
    name: str  # "AP" or "NDCG"
    k: int = DEFAULT_DEPTH
    gain: str = "linear"

    @classmethod
    def parse(cls, text: "str | Metric", default_k: int = DEFAULT_DEPTH,
              gain: str = "linear") -> "Metric":
        if isinstance(text, Metric):
            return text
        m = re.fullmatch(r"(?i)\s*(AP|NDCG)\s*(?:@\s*(\d+))?\s*", str(text))
        if not m:
            raise ConfigError(f"unknown metric {text!r}; use AP@k or NDCG@k")
        k = int(m.group(2)) if m.group(2) else default_k
        if k < 1:
            raise ConfigError("metric cutoff must be >= 1")
        return cls(m.group(1).upper(), k, gain)

    def __str__(self):
        return f"{self.name}@{self.k}"


def topic_scores(runs: RunSet, q: Qrels, topic: str, metric: Metric) -> np.ndarray | None:
    """Metric value of every system on one topic; None if the topic has no relevant doc."""
    grades = q.for_topic(topic)
    idx = runs.topic_index(topic)
    per_doc = np.array([grades.get(d, 0) for d in idx.doc_ids], dtype=float)
    k = metric.k
    if metric.name == "AP":
        n_rel = sum(1 for g in grades.values() if g > 0)
        if n_rel == 0:
            return None
        rel = idx.lookup_values(per_doc > 0, k, fill=False)
        return ap_batch(rel, n_rel)
    ideal = np.sort(_gain(list(grades.values()), metric.gain))[::-1]
    if ideal.size == 0 or ideal[0] <= 0:
        return None
    gains = _gain(idx.lookup_values(per_doc, k, fill=0.0), metric.gain)
    if gains.shape[1] < k:
        gains = np.pad(gains, ((0, 0), (0, k - gains.shape[1])))
    return ndcg_batch(gains, ideal)


def build_ap_matrix(runs: RunSet, q: Qrels, metric="AP@1000") -> ApMatrix:
    """System x topic metric table; zero-relevant topics are dropped with a warning."""
    metric = Metric.parse(metric)
    kept, cols, dropped = [], [], []
    for t in runs.topics:
        col = topic_scores(runs, q, t, metric)
        if col is None:
            dropped.append(t)
            continue
        kept.append(t)
        cols.append(np.clip(col, 0.0, 1.0))
    if dropped:
        warnings.warn(f"excluded {len(dropped)} topic(s) without relevant documents: "
                      + ", ".join(dropped), ExcludedTopicWarning, stacklevel=2)
    values = np.column_stack(cols) if cols else np.zeros((len(runs.systems), 0))
    return ApMatrix(runs.systems, kept, values)
