"""Per-topic effectiveness (AP, NDCG) and row/column aggregates of an ApMatrix."""

from __future__ import annotations

from typing import Mapping, Sequence, TextIO

import numpy as np

from .errors import ConfigError, DataError, DegenerateError
from .matrix import ApMatrix, EffVector, write_matrix_csv

EPS = 1e-5


def _grades_for(q, topic) -> Mapping[str, int]:
    if hasattr(q, "for_topic"):
        return q.for_topic(topic)
    return q


def average_precision(ranked: Sequence[str], q, topic=None, k: int = 1000) -> float:
    """AP@k of one ranked list; documents with grade > 0 are relevant.

    ``q`` is a Qrels (with ``topic``) or a plain ``{doc: grade}`` mapping.
    """
    grades = _grades_for(q, topic)
    n_rel = sum(1 for g in grades.values() if g > 0)
    if n_rel == 0:
        raise DegenerateError(f"topic {topic!r} has no relevant documents")
    found = 0
    total = 0.0
    for pos, doc in enumerate(ranked[:k], start=1):
        if grades.get(doc, 0) > 0:
            found += 1
            total += found / pos
    return total / n_rel


def _gain(grades: np.ndarray, gain: str) -> np.ndarray:
    grades = np.clip(np.asarray(grades, dtype=float), 0.0, None)
    if gain == "linear":
        return grades
    if gain == "exponential":
        return np.power(2.0, grades) - 1.0
    raise ConfigError(f"unknown gain {gain!r}")


def ndcg(ranked: Sequence[str], q, topic=None, k: int = 1000,
         gain: str = "linear") -> float:
    """NDCG@k with discount 1/log2(rank+1); negative grades count as 0."""
    grades = _grades_for(q, topic)
    ideal = np.sort(_gain(list(grades.values()), gain))[::-1][:k]
    if ideal.size == 0 or ideal[0] <= 0:
        raise DegenerateError(f"topic {topic!r} has no positive gain")
    got = _gain([grades.get(d, 0) for d in ranked[:k]], gain)
    disc = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = float(np.dot(got, disc[: got.size]))
    idcg = float(np.dot(ideal, disc[: ideal.size]))
    return dcg / idcg


def ap_batch(rel: np.ndarray, n_rel) -> np.ndarray:
    """AP for many lists at once.

    ``rel`` is (..., depth) with 1 for relevant retrieved positions, already
    truncated to the cutoff; ``n_rel`` broadcasts against ``rel[..., 0]``.
    Entries with ``n_rel == 0`` get AP 0.
    """
    rel = np.asarray(rel, dtype=float)
    pos = np.arange(1, rel.shape[-1] + 1, dtype=float)
    prec = np.cumsum(rel, axis=-1) / pos
    num = np.sum(prec * rel, axis=-1)
    n_rel = np.asarray(n_rel, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(n_rel > 0, num / np.where(n_rel > 0, n_rel, 1.0), 0.0)
    return out


def ndcg_batch(gains: np.ndarray, ideal: np.ndarray) -> np.ndarray:
    """NDCG for many lists sharing one ideal gain vector (both already gain-mapped)."""
    gains = np.asarray(gains, dtype=float)
    k = gains.shape[-1]
    disc = 1.0 / np.log2(np.arange(2, k + 2))
    ideal = np.asarray(ideal, dtype=float)[:k]
    idcg = float(np.dot(ideal, disc[: ideal.size]))
    if idcg <= 0:
        raise DegenerateError("no positive gain")
    return (gains @ disc) / idcg


def _logit(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, EPS, 1.0 - EPS)
    return np.log(v / (1.0 - v))


def _aggregate(values: np.ndarray, kind: str, axis: int) -> np.ndarray:
    kind_u = kind.upper()
    if kind_u in ("MAP", "AAP"):
        return values.mean(axis=axis)
    if kind_u in ("GMAP", "GAAP"):
        return np.exp(np.log(np.where(values > 0, values, EPS)).mean(axis=axis))
    if kind_u in ("LOGITMAP", "LOGITAAP"):
        return _logit(values).mean(axis=axis)
    raise ConfigError(f"unknown aggregate {kind!r}")


def aggregate_rows(a: ApMatrix, kind: str = "MAP") -> EffVector:
    """Per-system aggregate: MAP, GMAP or logitMAP."""
    if kind.upper() not in ("MAP", "GMAP", "LOGITMAP"):
        raise ConfigError(f"unknown row aggregate {kind!r}")
    if a.values.shape[1] == 0:
        raise DataError("matrix has no topics")
    return EffVector(a.systems, _aggregate(a.values, kind, 1), kind)


def aggregate_cols(a: ApMatrix, kind: str = "AAP") -> EffVector:
    """Per-topic aggregate over systems: AAP or GAAP."""
    if kind.upper() not in ("AAP", "GAAP", "LOGITAAP"):
        raise ConfigError(f"unknown column aggregate {kind!r}")
    if a.values.shape[0] == 0:
        raise DataError("matrix has no systems")
    return EffVector(a.topics, _aggregate(a.values, kind, 0), kind)


def wmap(a: ApMatrix, topic_weights) -> EffVector:
    """Weighted MAP with weights normalized to sum 1."""
    w = np.asarray(topic_weights, dtype=float)
    if w.shape != (a.values.shape[1],):
        raise DataError(f"need {a.values.shape[1]} weights, got {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ConfigError("all topic weights are zero")
    return EffVector(a.systems, a.values @ (w / total), "WMAP")


def vector_csv(v: EffVector, stream: TextIO | None = None) -> str | None:
    return v.to_csv(stream)


def matrix_csv(a: ApMatrix, stream: TextIO | None = None) -> str | None:
    return write_matrix_csv(a, stream)
