"""Combining several judgement-free predictions into one.

Unsupervised data fusion (average, rank position, Borda, Condorcet), the
a-posteriori oracle choice, and a closed-form ridge combiner trained on
older collections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .association import correlation, fractional_ranks
from .autojudge import METHOD_NAMES
from .errors import ConfigError, DataError, DegenerateError
from .matrix import ApMatrix, EffVector, PredictedMatrix, ScoreMatrix

STRATEGIES = ("average", "rank_position", "borda", "condorcet")
DEFAULT_EXCLUDED = ("WUC-V4",)
WORST_FOUR = ("NC-NRP", "SPO-S", "SPO-A", "SPO-SA")


def ranks_desc(scores) -> np.ndarray:
    """1-based ranks with the highest score first; ties share their mean rank."""
    return fractional_ranks(-np.asarray(scores, dtype=float))


def fuse_ranks(ranks: np.ndarray, strategy: str, n_items: int | None = None) -> np.ndarray:
    """Fuse a (methods, items) rank matrix.

    rank_position: 1 / sum(1/r), lower is better.  borda: sum(N - r) divided
    by q(N - 1), higher is better (:func:`borda_raw` gives the unscaled sum).
    condorcet: (N - 1 - position) / (N - 1) in the pairwise-majority order.
    """
    ranks = np.atleast_2d(np.asarray(ranks, dtype=float))
    q, n = ranks.shape
    n_items = n if n_items is None else n_items
    if strategy == "rank_position":
        return 1.0 / np.sum(1.0 / ranks, axis=0)
    if strategy == "borda":
        denom = q * (n_items - 1)
        raw = borda_raw(ranks, n_items)
        return raw / denom if denom > 0 else np.ones(n)
    if strategy == "condorcet":
        order = condorcet_order(ranks)
        score = np.empty(n)
        pos = np.empty(n)
        pos[order] = np.arange(n)
        score[:] = (n - 1 - pos) / (n - 1) if n > 1 else 1.0
        return score
    raise ConfigError(f"unknown rank fusion {strategy!r}")


def borda_raw(ranks: np.ndarray, n_items: int) -> np.ndarray:
    """Sum over methods of (N - rank)."""
    ranks = np.atleast_2d(np.asarray(ranks, dtype=float))
    return np.sum(n_items - ranks, axis=0)


def condorcet_tally(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise-majority wins, losses and ties of every item (lower rank preferred)."""
    ranks = np.atleast_2d(np.asarray(ranks, dtype=float))
    pref = np.sign(ranks[:, None, :] - ranks[:, :, None])  # [k, a, b] = +1 if a beats b
    votes = pref.sum(axis=0)
    n = ranks.shape[1]
    off = ~np.eye(n, dtype=bool)
    wins = np.sum((votes > 0) & off, axis=1)
    losses = np.sum((votes < 0) & off, axis=1)
    ties = np.sum((votes == 0) & off, axis=1)
    return wins, losses, ties


def condorcet_order(ranks: np.ndarray) -> np.ndarray:
    """Item indices sorted by wins desc, losses asc, ties desc, then index."""
    wins, losses, ties = condorcet_tally(ranks)
    idx = np.arange(wins.size)
    return np.lexsort((idx, -ties, losses, -wins))


@dataclass(frozen=True)
class FusedResult:
    labels: tuple
    values: np.ndarray
    strategy: str
    higher_is_better: bool
    methods: tuple[str, ...]

    def as_scores(self) -> np.ndarray:
        """Values oriented so that larger means better."""
        return self.values if self.higher_is_better else -self.values


def _stack(inputs) -> tuple[np.ndarray, tuple, tuple, tuple[str, ...]]:
    items = list(inputs.items()) if isinstance(inputs, Mapping) else list(enumerate(inputs))
    if len(items) < 2:
        raise ConfigError("fusion needs at least two inputs")
    names, arrays, rows, cols = [], [], None, None
    for name, inp in items:
        if isinstance(inp, ScoreMatrix):
            if rows is None:
                rows, cols = inp.systems, inp.topics
            elif (inp.systems, inp.topics) != (rows, cols):
                raise DataError(f"input {name!r} has different labels")
            arrays.append(inp.values)
        else:
            arr = inp.values if isinstance(inp, EffVector) else np.asarray(inp, dtype=float)
            arrays.append(arr)
            if isinstance(inp, EffVector):
                rows = rows or inp.labels
        names.append(str(name))
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise DataError("fusion inputs differ in shape")
    return np.stack(arrays), rows, cols, tuple(names)


def fuse(inputs, strategy: str = "average", target: str = "AP") -> FusedResult:
    """Fuse several predictions of the same items.

    ``inputs`` is a mapping (or list) of PredictedMatrix, EffVector or plain
    arrays.  For matrices, ``target`` picks what is fused: ``MAP`` (row
    means), ``AAP`` (column means) or ``AP`` (every column separately).
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    stack, rows, cols, names = _stack(inputs)
    labels = rows
    if stack.ndim == 3:
        if target == "MAP":
            stack = stack.mean(axis=2)
        elif target == "AAP":
            stack = stack.mean(axis=1)
            labels = cols
        elif target != "AP":
            raise ConfigError("target must be MAP, AAP or AP")
    if labels is None:
        labels = tuple(range(stack.shape[1]))
    if strategy == "average":
        return FusedResult(tuple(labels), stack.mean(axis=0), strategy, True, names)
    higher = strategy != "rank_position"
    if stack.ndim == 2:
        ranks = np.vstack([ranks_desc(v) for v in stack])
        out = fuse_ranks(ranks, strategy)
    else:
        out = np.empty(stack.shape[1:])
        for j in range(stack.shape[2]):
            ranks = np.vstack([ranks_desc(v) for v in stack[:, :, j]])
            out[:, j] = fuse_ranks(ranks, strategy)
    return FusedResult(tuple(labels), out, strategy, higher, names)


def fused_matrix(result: FusedResult, systems, topics) -> PredictedMatrix:
    """Wrap an AP-target fusion result as a PredictedMatrix (higher is better)."""
    return PredictedMatrix(systems, topics, result.as_scores(), f"DF-{result.strategy}", "raw",
                           {"methods": list(result.methods),
                            "negated": not result.higher_is_better})


def method_subset(names: Sequence[str], preset: str = "all") -> list[str]:
    """``all`` drops WUC-V4; ``selected`` additionally drops the four weakest methods."""
    if preset not in ("all", "selected"):
        raise ConfigError("preset must be 'all' or 'selected'")
    drop = set(DEFAULT_EXCLUDED)
    if preset == "selected":
        drop |= set(WORST_FOUR)
    return [n for n in names if n not in drop]


# ---------------------------------------------------------------- oracle


def _registry_key(name: str, position: int):
    return (METHOD_NAMES.index(name), 0) if name in METHOD_NAMES else (len(METHOD_NAMES), position)


def oracle(candidates: Mapping[str, object], truth, measure: str = "kendall") -> tuple[str, float]:
    """Candidate whose (row-mean) scores correlate best with ``truth``.

    Ties go to the method listed first in the method registry.
    """
    if not candidates:
        raise ConfigError("no candidates")
    t = truth.values if isinstance(truth, EffVector) else np.asarray(truth, dtype=float)
    scored = []
    for pos, (name, cand) in enumerate(candidates.items()):
        if isinstance(cand, ScoreMatrix):
            v = cand.values.mean(axis=1)
        elif isinstance(cand, EffVector):
            v = cand.values
        else:
            v = np.asarray(cand, dtype=float)
        scored.append((_registry_key(name, pos), name, correlation(measure, v, t)))
    scored.sort(key=lambda s: s[0])
    best_name, best_val = scored[0][1], scored[0][2]
    for _, name, val in scored[1:]:
        if val > best_val:
            best_name, best_val = name, val
    return best_name, float(best_val)


# ---------------------------------------------------------------- ridge


@dataclass
class RidgeModel:
    weights: np.ndarray
    intercept: float
    lam: float
    columns: tuple[str, ...] = ()
    training: tuple[str, ...] = ()

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.weights + self.intercept

    def to_json(self) -> str:
        return json.dumps({
            "lambda": self.lam,
            "intercept": self.intercept,
            "weights": dict(zip(self.columns or [str(i) for i in range(self.weights.size)],
                                self.weights.tolist())),
            "training_collections": list(self.training),
        }, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RidgeModel":
        d = json.loads(text)
        cols = tuple(d["weights"])
        return cls(np.array([d["weights"][c] for c in cols]), d["intercept"], d["lambda"],
                   cols, tuple(d.get("training_collections", ())))


def ridge_fit(x, y, lam: float = 1.0, fit_intercept: bool = True,
              columns: Sequence[str] = (), training: Sequence[str] = ()) -> RidgeModel:
    """Closed-form ridge regression; the intercept is not penalized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("x must be (rows, cols) and y (rows,)")
    if lam < 0:
        raise ConfigError("lambda must be non-negative")
    if fit_intercept:
        xm, ym = x.mean(axis=0), y.mean()
        xc, yc = x - xm, y - ym
    else:
        xm, ym = np.zeros(x.shape[1]), 0.0
        xc, yc = x, y
    gram = xc.T @ xc + lam * np.eye(x.shape[1])
    if lam == 0:
        s = np.linalg.svd(gram, compute_uv=False)
        if s.size == 0 or s[-1] <= s[0] * 1e-12:
            raise DegenerateError("singular least-squares system; use lambda > 0")
    try:
        w = np.linalg.solve(gram, xc.T @ yc)
    except np.linalg.LinAlgError:
        raise DegenerateError("singular ridge system") from None
    return RidgeModel(w, float(ym - xm @ w), float(lam), tuple(columns), tuple(training))


@dataclass(frozen=True)
class DesignMatrix:
    rows: tuple[tuple[str, str], ...]
    columns: tuple[str, ...]
    x: np.ndarray
    y: np.ndarray | None = None


def design_matrix(predictions: Mapping[str, PredictedMatrix], truth: ApMatrix | None = None,
                  methods: Sequence[str] | None = None, preset: str = "all") -> DesignMatrix:
    """One row per (system, topic) cell, one column per method in registry order."""
    if methods is None:
        ordered = [n for n in METHOD_NAMES if n in predictions]
        ordered += [n for n in predictions if n not in METHOD_NAMES]
        methods = method_subset(ordered, preset)
    if not methods:
        raise ConfigError("no methods selected")
    ref = predictions[methods[0]]
    for name in methods:
        p = predictions.get(name)
        if p is None:
            raise DataError(f"missing predictions for {name!r}")
        if (p.systems, p.topics) != (ref.systems, ref.topics):
            raise DataError(f"predictions for {name!r} have different labels")
    rows = tuple((s, t) for s in ref.systems for t in ref.topics)
    x = np.column_stack([predictions[n].values.ravel() for n in methods])
    y = None
    if truth is not None:
        y = truth.select(ref.systems, ref.topics).values.ravel()
    return DesignMatrix(rows, tuple(methods), x, y)


# ---------------------------------------------------------------- collection similarity


def ks_distance(a, b) -> float:
    """Largest gap between the empirical CDFs of two samples."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DataError("samples must be non-empty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def select_similar_collections(test_features: Mapping[str, np.ndarray],
                               historical: Mapping[str, Mapping[str, np.ndarray]],
                               k: int | None = None) -> list[tuple[str, float]]:
    """Historical collections ordered by mean KS distance over shared methods."""
    if k is not None and k < 1:
        raise ConfigError("k must be >= 1")
    scored = []
    for cid, feats in historical.items():
        shared = [m for m in test_features if m in feats]
        if not shared:
            continue
        d = float(np.mean([ks_distance(test_features[m], feats[m]) for m in shared]))
        scored.append((d, str(cid)))
    scored.sort()
    out = [(cid, d) for d, cid in scored]
    return out if k is None else out[:k]


@dataclass
class Collection:
    """A past or present test collection with its method predictions."""

    name: str
    year: int
    predictions: Mapping[str, PredictedMatrix]
    truth: ApMatrix | None = None
    features: dict = field(default_factory=dict)

    def feature_samples(self) -> dict[str, np.ndarray]:
        return {n: p.values.ravel() for n, p in self.predictions.items()}


def train_on_older(target: Collection, history: Sequence[Collection], lam: float = 1.0,
                   preset: str = "all", most_similar: int | None = None,
                   normalize_inputs: bool = True) -> tuple[RidgeModel, PredictedMatrix]:
    """Fit ridge on strictly older collections and predict the target's AP cells."""
    from .autojudge import normalize

    # collections from the target's year or later are never used for training
    older = [c for c in history if c.year < target.year and c.truth is not None]
    if not older:
        raise ConfigError(f"no collection older than {target.year} with ground truth")
    prep = (lambda p: normalize(p)) if normalize_inputs else (lambda p: p)
    if most_similar is not None:
        feats = {n: prep(p).values.ravel() for n, p in target.predictions.items()}
        ranked = select_similar_collections(
            feats, {c.name: {n: prep(p).values.ravel() for n, p in c.predictions.items()}
                    for c in older}, most_similar)
        keep = {cid for cid, _ in ranked}
        older = [c for c in older if c.name in keep]
    ordered = [n for n in METHOD_NAMES if n in target.predictions]
    methods = [n for n in method_subset(ordered, preset)
               if all(n in c.predictions for c in older)]
    xs, ys = [], []
    for c in older:
        dm = design_matrix({n: prep(c.predictions[n]) for n in methods}, c.truth, methods)
        xs.append(dm.x)
        ys.append(dm.y)
    model = ridge_fit(np.vstack(xs), np.concatenate(ys), lam, columns=methods,
                      training=[c.name for c in older])
    dm_t = design_matrix({n: prep(target.predictions[n]) for n in methods}, None, methods)
    ref = target.predictions[methods[0]]
    pred = model.predict(dm_t.x).reshape(len(ref.systems), len(ref.topics))
    return model, PredictedMatrix(ref.systems, ref.topics, pred, "ridge", "raw",
                                  {"lambda": lam, "training": list(model.training)})
