"""System x topic score tables and labelled score vectors."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DataError, ParseError


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise DataError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_labels(labels: Sequence[str], what: str) -> tuple[str, ...]:
    labels = tuple(str(x) for x in labels)
    if len(set(labels)) != len(labels):
        raise DataError(f"duplicate {what} labels")
    return labels


@dataclass(frozen=True)
class ScoreMatrix:
    """Dense m x n table, rows are systems and columns are topics."""

    systems: tuple[str, ...]
    topics: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "systems", _check_labels(self.systems, "system"))
        object.__setattr__(self, "topics", _check_labels(self.topics, "topic"))
        vals = _frozen_array(self.values, (len(self.systems), len(self.topics)))
        if not np.all(np.isfinite(vals)):
            raise DataError("matrix contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, topic: str) -> np.ndarray:
        return self.values[:, self.topics.index(topic)]

    def row(self, system: str) -> np.ndarray:
        return self.values[self.systems.index(system)]

    def _rebuild(self, systems, topics, values):
        return type(self)(systems, topics, values)

    def select(self, systems: Iterable[str] | None = None,
               topics: Iterable[str] | None = None):
        """Sub-matrix on the given labels, in the given order."""
        sys_list = list(self.systems if systems is None else systems)
        top_list = list(self.topics if topics is None else topics)
        try:
            ri = [self.systems.index(s) for s in sys_list]
            ci = [self.topics.index(t) for t in top_list]
        except ValueError as exc:
            raise DataError(f"unknown label: {exc}") from None
        return self._rebuild(sys_list, top_list, self.values[np.ix_(ri, ci)])

    def same_labels(self, other: "ScoreMatrix") -> bool:
        return self.systems == other.systems and self.topics == other.topics

    def to_csv(self, stream: TextIO | None = None, fmt: str = "%.17g") -> str | None:
        return write_matrix_csv(self, stream, fmt)


@dataclass(frozen=True)
class ApMatrix(ScoreMatrix):
    """Effectiveness table; every cell lies in [0, 1]."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise DataError("ApMatrix values must lie in [0, 1]")


@dataclass(frozen=True)
class PredictedMatrix(ScoreMatrix):
    """Scores produced without relevance judgements.

    ``normalization`` is ``"raw"`` or ``"minmax01"``; metadata carries
    method-specific notes (seeds, conventions) for output sidecars.
    """

    method: str = "unknown"
    normalization: str = "raw"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        super().__post_init__()
        if self.normalization not in ("raw", "minmax01"):
            raise DataError(f"unknown normalization tag {self.normalization!r}")
        if self.normalization == "minmax01" and self.values.size:
            if self.values.min() < 0.0 or self.values.max() > 1.0:
                raise DataError("minmax01 matrix outside [0, 1]")

    def _rebuild(self, systems, topics, values):
        return PredictedMatrix(systems, topics, values, self.method,
                               self.normalization, dict(self.metadata))

    def as_ap_matrix(self) -> ApMatrix:
        """View a [0,1]-valued prediction as an ApMatrix (e.g. for injection)."""
        return ApMatrix(self.systems, self.topics, self.values)


@dataclass(frozen=True)
class EffVector:
    """Labelled real vector: systems for MAP-like, topics for AAP-like."""

    labels: tuple[str, ...]
    values: np.ndarray
    kind: str = ""

    def __post_init__(self):
        labels = _check_labels(self.labels, "vector")
        object.__setattr__(self, "labels", labels)
        vals = _frozen_array(self.values, (len(labels),))
        if not np.all(np.isfinite(vals)):
            raise DataError("EffVector contains non-finite values")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.labels)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.values.tolist()))

    def to_csv(self, stream: TextIO | None = None, fmt: str = "%.17g") -> str | None:
        out = io.StringIO() if stream is None else stream
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["label", self.kind or "value"])
        for lab, val in zip(self.labels, self.values):
            w.writerow([lab, fmt % val])
        return out.getvalue() if stream is None else None


def write_matrix_csv(mat: ScoreMatrix, stream: TextIO | None = None,
                     fmt: str = "%.17g") -> str | None:
    """Grid CSV: header ``system,<topic ids>``, one row per system."""
    out = io.StringIO() if stream is None else stream
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["system", *mat.topics])
    for name, row in zip(mat.systems, mat.values):
        w.writerow([name, *(fmt % v for v in row)])
    return out.getvalue() if stream is None else None


def read_matrix_csv(stream: TextIO, kind: type = ApMatrix, source=None):
    """Inverse of :func:`write_matrix_csv`."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty matrix CSV", source=source) from None
    topics = header[1:]
    systems, rows = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}",
                             line_no, source)
        try:
            rows.append([float(x) for x in row[1:]])
        except ValueError:
            raise ParseError("non-numeric cell", line_no, source) from None
        systems.append(row[0])
    values = np.array(rows, dtype=float).reshape(len(systems), len(topics))
    return kind(systems, topics, values)
