"""Effectiveness prediction without relevance judgements.

Every method reads only a RunSet and returns a PredictedMatrix with the
RunSet's systems as rows and topics as columns.  Methods that fabricate
pseudo-qrels (SNC, the Nuray-Can family, Sakai-Lin) score runs by AP
against them.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .association import correlation
from .collection import Qrels, RunSet, TopicIndex, build_pool
from .effectiveness import ap_batch
from .errors import ConfigError, DataError, DegenerateError
from .matrix import ApMatrix, PredictedMatrix

_METHOD_CODES = {"SNC": 1, "SPO": 2}


def _topic_rng(seed: int, method: str, rep: int, topic_pos: int) -> np.random.Generator:
    """Independent stream per (method, repetition, topic)."""
    return np.random.default_rng([int(seed), _METHOD_CODES.get(method, 0), rep, topic_pos])


def _predicted(runs: RunSet, topics, values, method, metadata=None) -> PredictedMatrix:
    return PredictedMatrix(runs.systems, topics, values, method, "raw", dict(metadata or {}))


def _ap_against(idx: TopicIndex, relevant: np.ndarray, n_rel: int, k: int) -> np.ndarray:
    """AP of every system given a relevance flag for each of the topic's doc ids."""
    rel = idx.lookup_values(relevant, k, fill=False)
    return ap_batch(rel, n_rel)


# ---------------------------------------------------------------- SNC


def estimate_pool_params(num_runs: int) -> tuple[float, float]:
    """Relevant-fraction mean (percent) and std from the number of runs.

    The linear fit is kept inside [0.1, 100] percent.
    """
    if num_runs < 1:
        raise ConfigError("num_runs must be >= 1")
    mu = 1133.3 / num_runs - 5.1841
    mu = min(max(mu, 0.1), 100.0)
    return mu, 0.0037 * mu + 0.0242


@dataclass(frozen=True)
class PseudoQrels:
    qrels: Qrels
    method: str
    seed: int
    repetition: int


@dataclass
class SncResult:
    predicted: PredictedMatrix
    per_rep: np.ndarray  # (reps, m, n)
    pseudo_qrels: list = field(default_factory=list)
    skipped_topics: tuple = ()

    def rep_matrix(self, rep: int) -> PredictedMatrix:
        p = self.predicted
        return PredictedMatrix(p.systems, p.topics, self.per_rep[rep], p.method, "raw",
                               dict(p.metadata, repetition=rep))


def snc(runs: RunSet, mu: float | None = None, sigma: float | None = None,
        use_duplicates: bool = False, reps: int = 20, seed: int = 0,
        pool_depth: int = 100, source: str = "pool", qrels: Qrels | None = None,
        exact_fraction: Mapping[str, float] | None = None,
        keep_qrels: bool = False) -> SncResult:
    """Random pseudo-qrels sampled from the pool (or from judged documents).

    Per repetition and topic the relevant fraction f ~ N(mu/100, sigma) is
    clipped to [0, 1] and floor(f * pool_size) documents are drawn without
    replacement.  With ``use_duplicates`` the draw is over the multiset of
    pool occurrences, so documents retrieved by many runs are likelier to be
    picked.  ``exact_fraction`` maps topics to their own mu (percent).
    When a draw picks no document every system gets AP 0 for that topic.
    """
    if mu is None or sigma is None:
        est_mu, est_sigma = estimate_pool_params(len(runs.systems))
        mu = est_mu if mu is None else mu
        sigma = est_sigma if sigma is None else sigma
    if not 0.0 < mu <= 100.0:
        raise ConfigError("mu must lie in (0, 100]")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    if source not in ("pool", "qrels"):
        raise ConfigError("source must be 'pool' or 'qrels'")
    if source == "qrels" and qrels is None:
        raise ConfigError("source='qrels' needs judged documents")

    if source == "pool":
        pool = build_pool(runs, min(pool_depth, runs.depth), multiset=True)
    else:
        pool = {t: Counter(qrels.for_topic(t)) for t in runs.topics}

    kept, skipped = [], []
    for t in runs.topics:
        (kept if pool.get(t) else skipped).append(t)
    if skipped:
        warnings.warn(f"skipping topics with an empty pool: {', '.join(skipped)}", stacklevel=2)

    m = len(runs.systems)
    per_rep = np.zeros((reps, m, len(kept)))
    pseudo: list[PseudoQrels] = []
    k = runs.depth
    for j, t in enumerate(kept):
        idx = runs.topic_index(t)
        pos_of = {d: i for i, d in enumerate(idx.doc_ids)}
        counter = pool[t]
        docs = sorted(counter)
        if use_duplicates:
            draw_from = np.repeat(np.arange(len(docs)), [counter[d] for d in docs])
        else:
            draw_from = np.arange(len(docs))
        t_mu = mu if exact_fraction is None else exact_fraction.get(t, mu)
        topic_pos = runs.topics.index(t)
        for r in range(reps):
            rng = _topic_rng(seed, "SNC", r, topic_pos)
            f = float(np.clip(rng.normal(t_mu / 100.0, sigma), 0.0, 1.0))
            size = int(math.floor(f * draw_from.size))
            picked = rng.choice(draw_from, size=size, replace=False) if size else np.empty(0, int)
            chosen = sorted({docs[i] for i in picked.tolist()})
            if keep_qrels:
                pseudo.append((r, t, tuple(chosen)))
            if not chosen:
                continue
            relevant = np.zeros(idx.num_docs, dtype=bool)
            for d in chosen:
                if d in pos_of:
                    relevant[pos_of[d]] = True
            per_rep[r, :, j] = _ap_against(idx, relevant, len(chosen), k)

    pq_list = []
    if keep_qrels:
        for r in range(reps):
            entries = {(t, d): 1 for rr, t, chosen in pseudo if rr == r for d in chosen}
            pq_list.append(PseudoQrels(Qrels(entries, (0, 1)), "SNC", seed, r))
    name = "SNC-dups" if use_duplicates else ("SNC-qrels" if source == "qrels" else "SNC")
    meta = {"mu": mu, "sigma": sigma, "reps": reps, "seed": seed, "pool_depth": pool_depth,
            "source": source, "duplicates": use_duplicates,
            "exact_fraction": exact_fraction is not None}
    pred = _predicted(runs, kept, per_rep.mean(axis=0), name, meta)
    return SncResult(pred, per_rep, pq_list, tuple(skipped))


def rep_taus(result: SncResult, truth: ApMatrix, kind: str = "kendall") -> np.ndarray:
    """Correlation of each repetition's predicted MAP with the true MAP."""
    common = [t for t in result.predicted.topics if t in truth.topics]
    if not common:
        raise DataError("no topics shared with the ground truth")
    cols = [result.predicted.topics.index(t) for t in common]
    true_map = truth.select(result.predicted.systems, common).values.mean(axis=1)
    return np.array([correlation(kind, rep[:, cols].mean(axis=1), true_map)
                     for rep in result.per_rep])


# ---------------------------------------------------------------- WUC


WUC_VARIANTS = ("V0", "V1", "V2", "V3", "V4")


def _rank_weights(idx: TopicIndex, depth: int) -> np.ndarray:
    """(m, docs) weight (depth - rank + 1) / depth, 0 where not retrieved."""
    r = idx.rank_matrix(depth).astype(float)
    return np.where(r > 0, (depth - r + 1.0) / depth, 0.0)


def _score_weights(idx: TopicIndex, depth: int) -> np.ndarray:
    """(m, docs) min-max normalized run score, 0 where not retrieved."""
    ids = idx.ids[:, :depth]
    sc = idx.scores[:, : ids.shape[1]]
    out = np.zeros((ids.shape[0], idx.num_docs))
    for i in range(ids.shape[0]):
        n_i = int(min(idx.lengths[i], depth))
        if n_i == 0:
            continue
        s = sc[i, :n_i]
        if np.any(~np.isfinite(s)):
            raise DataError("WUC-V4 needs retrieval scores")
        lo, hi = s.min(), s.max()
        w = (s - lo) / (hi - lo) if hi > lo else np.ones(n_i)
        out[i, ids[i, :n_i]] = w
    return out


def wuc(runs: RunSet, variant: str = "V0", depth: int | None = None) -> PredictedMatrix:
    """Reference-count scores: how often a run's documents appear in other runs.

    score(s, t) = sum over s's documents of orig_weight * (sum of reference
    weights in the other runs), divided by (list length * (m - 1)).
    V0: all weights 1; V1: rank-decayed reference weights; V2: rank-decayed
    original weights; V3: both; V4: rank-decayed references and min-max
    normalized run scores as original weights.
    """
    if variant not in WUC_VARIANTS:
        raise ConfigError(f"unknown WUC variant {variant!r}")
    depth = runs.depth if depth is None else depth
    m = len(runs.systems)
    out = np.zeros((m, len(runs.topics)))
    if m < 2:
        return _predicted(runs, runs.topics, out, f"WUC-{variant}", {"depth": depth})
    for j, t in enumerate(runs.topics):
        idx = runs.topic_index(t)
        member = idx.membership(depth).astype(float)
        lengths = member.sum(axis=1)
        ranked = _rank_weights(idx, depth) if variant in ("V1", "V2", "V3", "V4") else None
        ref = ranked if variant in ("V1", "V3", "V4") else member
        if variant in ("V2", "V3"):
            orig = ranked
        elif variant == "V4":
            orig = _score_weights(idx, depth)
        else:
            orig = member
        total = ref.sum(axis=0)
        raw = np.sum(orig * (total[None, :] - ref), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, j] = np.where(lengths > 0, raw / (np.maximum(lengths, 1) * (m - 1)), 0.0)
    return _predicted(runs, runs.topics, out, f"WUC-{variant}", {"depth": depth})


# ---------------------------------------------------------------- Aslam-Savell


def aslam_savell(runs: RunSet, depth: int | None = None) -> PredictedMatrix:
    """Mean Jaccard overlap of a run's list with every other run's list, per topic."""
    m = len(runs.systems)
    if m < 2:
        raise ConfigError("Aslam-Savell needs at least two runs")
    depth = runs.depth if depth is None else depth
    out = np.zeros((m, len(runs.topics)))
    both_empty = 0
    for j, t in enumerate(runs.topics):
        jac, n_empty = _jaccard(runs.topic_index(t), depth)
        both_empty += n_empty
        out[:, j] = (jac.sum(axis=1) - np.diag(jac)) / (m - 1)
    return _predicted(runs, runs.topics, out, "AS",
                      {"depth": depth, "empty_pairs_scored_1": both_empty})


def _jaccard(idx: TopicIndex, depth: int) -> tuple[np.ndarray, int]:
    b = idx.membership(depth).astype(float)
    inter = b @ b.T
    lengths = b.sum(axis=1)
    union = lengths[:, None] + lengths[None, :] - inter
    empty = union == 0
    jac = np.where(empty, 1.0, inter / np.where(empty, 1.0, union))
    n_empty = int((np.count_nonzero(empty) - np.count_nonzero(np.diag(empty))) // 2)
    return jac, n_empty


# ---------------------------------------------------------------- voting methods


def bias_selection(runs: RunSet, fraction: float = 0.5, depth: int | None = None) -> list[str]:
    """Runs farthest from the others: highest mean Jaccard dissimilarity over topics."""
    m = len(runs.systems)
    depth = runs.depth if depth is None else depth
    if m < 2:
        raise ConfigError("bias selection needs at least two runs")
    dist = np.zeros(m)
    for t in runs.topics:
        jac, _ = _jaccard(runs.topic_index(t), depth)
        dist += 1.0 - (jac.sum(axis=1) - np.diag(jac)) / (m - 1)
    dist /= max(len(runs.topics), 1)
    keep = max(1, int(math.ceil(fraction * m)))
    # ties go to the smaller label so the choice ignores input order
    label_rank = np.argsort(np.argsort(np.array(runs.systems, dtype=object), kind="stable"))
    order = np.lexsort((label_rank, -dist))[:keep]
    return [runs.systems[i] for i in sorted(order)]


def vote_scores(ranks: np.ndarray, lengths: np.ndarray, rule: str) -> tuple[np.ndarray, ...]:
    """Per-document sort keys for one topic (first key most significant, all ascending).

    ``ranks`` is (runs, docs) with 1-based rank or 0 when not retrieved;
    ``lengths`` the list length of each run.  Unretrieved documents rank
    below every retrieved one.
    """
    n_docs = ranks.shape[1]
    hit = ranks > 0
    if rule == "rank_position":
        inv = np.where(hit, 1.0 / np.where(hit, ranks, 1), 0.0).sum(axis=0)
        with np.errstate(divide="ignore"):
            score = np.where(inv > 0, 1.0 / inv, np.inf)
        return (score,)
    if rule == "borda":
        return (-np.where(hit, n_docs - ranks, 0).sum(axis=0).astype(float),)
    if rule == "condorcet":
        wins = np.where(hit, n_docs - ranks, 0).sum(axis=0)
        losses = np.where(hit, ranks - 1, lengths[:, None]).sum(axis=0)
        ties = np.where(hit, 0, n_docs - lengths[:, None] - 1).sum(axis=0)
        return (-wins.astype(float), losses.astype(float), -ties.astype(float))
    raise ConfigError(f"unknown voting rule {rule!r}")


def _rank_docs(idx: TopicIndex, rows: np.ndarray, depth: int, rule: str):
    ranks = idx.rank_matrix(depth)[rows]
    pooled = np.flatnonzero((ranks > 0).any(axis=0))
    ranks = ranks[:, pooled]
    lengths = (ranks > 0).sum(axis=1)
    keys = vote_scores(ranks, lengths, rule)
    doc_names = np.array([idx.doc_ids[i] for i in pooled], dtype=object)
    name_rank = np.argsort(np.argsort(doc_names, kind="stable"), kind="stable")
    order = np.lexsort((name_rank, *[k for k in reversed(keys)]))
    return pooled[order]


def _pseudo_ap(runs: RunSet, rows_for_topic, depth: int, rule_or_fn, rel_fraction: float,
               method: str, meta: dict):
    m = len(runs.systems)
    out = np.zeros((m, len(runs.topics)))
    entries = {}
    for j, t in enumerate(runs.topics):
        idx = runs.topic_index(t)
        rows = rows_for_topic
        ordered = rule_or_fn(idx, rows, depth)
        if ordered.size == 0:
            continue
        n_rel = max(1, int(math.floor(rel_fraction * ordered.size)))
        relevant = np.zeros(idx.num_docs, dtype=bool)
        relevant[ordered[:n_rel]] = True
        for i in ordered[:n_rel]:
            entries[(t, idx.doc_ids[i])] = 1
        out[:, j] = _ap_against(idx, relevant, n_rel, runs.depth)
    pq = PseudoQrels(Qrels(entries, (0, 1)), method, 0, 0)
    return _predicted(runs, runs.topics, out, method, meta), pq


NC_NAMES = {
    ("normal", "rank_position"): "NC-NRP", ("normal", "borda"): "NC-NB",
    ("normal", "condorcet"): "NC-NC", ("bias", "rank_position"): "NC-BRP",
    ("bias", "borda"): "NC-BB", ("bias", "condorcet"): "NC-BC",
}


def nuray_can(runs: RunSet, selection: str = "normal", voting: str = "borda",
              rel_fraction: float = 0.3, depth: int | None = None,
              bias_fraction: float = 0.5) -> tuple[PredictedMatrix, PseudoQrels]:
    """Vote over the selected runs, call the top ``rel_fraction`` relevant, score AP."""
    if selection not in ("normal", "bias"):
        raise ConfigError("selection must be 'normal' or 'bias'")
    if voting not in ("rank_position", "borda", "condorcet"):
        raise ConfigError(f"unknown voting rule {voting!r}")
    if not 0.0 < rel_fraction <= 1.0:
        raise ConfigError("rel_fraction must lie in (0, 1]")
    depth = runs.depth if depth is None else depth
    if selection == "bias":
        chosen = bias_selection(runs, bias_fraction, depth)
    else:
        chosen = list(runs.systems)
    if len(chosen) < 2:
        raise ConfigError("need at least two selected runs")
    rows = np.array([runs.systems.index(s) for s in chosen])
    name = NC_NAMES[(selection, voting)]
    meta = {"selection": selection, "voting": voting, "rel_fraction": rel_fraction,
            "depth": depth, "selected_runs": chosen}
    return _pseudo_ap(runs, rows, depth,
                      lambda idx, r, d: _rank_docs(idx, r, d, voting),
                      rel_fraction, name, meta)


def sakai_lin(runs: RunSet, rel_fraction: float = 0.3,
              depth: int | None = None) -> tuple[PredictedMatrix, PseudoQrels]:
    """Documents scored by pairwise win proportion over all runs, top share relevant."""
    m = len(runs.systems)
    if m < 2:
        raise ConfigError("Sakai-Lin needs at least two runs")
    depth = runs.depth if depth is None else depth

    def order_docs(idx, rows, d):
        ranks = idx.rank_matrix(d)
        pooled = np.flatnonzero((ranks > 0).any(axis=0))
        ranks = ranks[:, pooled]
        n = pooled.size
        if n == 0:
            return pooled
        wins = np.where(ranks > 0, n - ranks, 0).sum(axis=0)
        prop = wins / (m * max(n - 1, 1))
        names = np.array([idx.doc_ids[i] for i in pooled], dtype=object)
        name_rank = np.argsort(np.argsort(names, kind="stable"), kind="stable")
        return pooled[np.lexsort((name_rank, -prop))]

    meta = {"rel_fraction": rel_fraction, "depth": depth, "scoring": "win-proportion"}
    return _pseudo_ap(runs, np.arange(m), depth, order_docs, rel_fraction, "SL", meta)


def win_proportions(ranks: np.ndarray) -> np.ndarray:
    """Win proportion of each pooled document for a (runs, docs) rank matrix."""
    m, n = ranks.shape
    wins = np.where(ranks > 0, n - ranks, 0).sum(axis=0)
    return wins / (m * max(n - 1, 1))


# ---------------------------------------------------------------- Spoerri


def spoerri_partitions(m: int, rng: np.random.Generator, trials: int = 5) -> list[np.ndarray]:
    """``trials`` random partitions of range(m) into groups of five."""
    if m % 5 != 0 or m == 0:
        raise ConfigError(f"number of runs ({m}) must be a positive multiple of 5")
    return [rng.permutation(m).reshape(-1, 5) for _ in range(trials)]


def spoerri_measures(runs: RunSet, depth: int | None = None, seed: int = 0,
                     reps: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Single% and AllFive% per (run, topic), averaged over trials and repetitions."""
    m = len(runs.systems)
    depth = runs.depth if depth is None else depth
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    single = np.zeros((m, len(runs.topics)))
    allfive = np.zeros_like(single)
    members = [runs.topic_index(t).membership(depth) for t in runs.topics]
    # groups are drawn over label order so they do not depend on input order
    canon = np.argsort(np.array(runs.systems, dtype=object), kind="stable")
    for rep in range(reps):
        rng = _topic_rng(seed, "SPO", rep, 0)
        for part in spoerri_partitions(m, rng):
            for group in canon[part]:
                for j, b in enumerate(members):
                    g = b[group]
                    counts = g.sum(axis=0)
                    lengths = g.sum(axis=1)
                    s = (g & (counts == 1)[None, :]).sum(axis=1)
                    a = (g & (counts == 5)[None, :]).sum(axis=1)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        single[group, j] += np.where(lengths > 0, 100.0 * s / np.maximum(lengths, 1), 0.0)
                        allfive[group, j] += np.where(lengths > 0, 100.0 * a / np.maximum(lengths, 1), 0.0)
    n_avg = 5 * reps
    return single / n_avg, allfive / n_avg


def spoerri(runs: RunSet, measure: str = "S", depth: int | None = None, seed: int = 0,
            reps: int = 1) -> PredictedMatrix:
    """Trial-overlap scores, sign-flipped for S and S-A so larger means better."""
    if measure not in ("S", "A", "S_minus_A"):
        raise ConfigError("measure must be 'S', 'A' or 'S_minus_A'")
    s, a = spoerri_measures(runs, depth, seed, reps)
    value = {"S": -s, "A": a, "S_minus_A": -(s - a)}[measure]
    name = {"S": "SPO-S", "A": "SPO-A", "S_minus_A": "SPO-SA"}[measure]
    meta = {"depth": runs.depth if depth is None else depth, "seed": seed, "reps": reps,
            "sign_flipped": measure != "A"}
    return _predicted(runs, runs.topics, value, name, meta)


# ---------------------------------------------------------------- normalization / registry


def normalize(p: PredictedMatrix, mode: str = "minmax01") -> PredictedMatrix:
    """Whole-matrix min-max rescaling into [0, 1]."""
    if mode != "minmax01":
        raise ConfigError(f"unknown normalization {mode!r}")
    lo, hi = float(p.values.min()), float(p.values.max())
    if not hi > lo:
        raise DegenerateError("cannot normalize a constant matrix")
    vals = np.clip((p.values - lo) / (hi - lo), 0.0, 1.0)
    return PredictedMatrix(p.systems, p.topics, vals, p.method, "minmax01", dict(p.metadata))


def _snc_method(runs, seed=0, reps=20, **kw):
    return snc(runs, seed=seed, reps=reps, **kw).predicted


METHODS: dict[str, Callable[..., PredictedMatrix]] = {
    "SNC": lambda runs, seed=0, **kw: _snc_method(runs, seed=seed, use_duplicates=True, **kw),
    "WUC-V0": lambda runs, **kw: wuc(runs, "V0"),
    "WUC-V1": lambda runs, **kw: wuc(runs, "V1"),
    "WUC-V2": lambda runs, **kw: wuc(runs, "V2"),
    "WUC-V3": lambda runs, **kw: wuc(runs, "V3"),
    "WUC-V4": lambda runs, **kw: wuc(runs, "V4"),
    "AS": lambda runs, **kw: aslam_savell(runs),
    "NC-NRP": lambda runs, **kw: nuray_can(runs, "normal", "rank_position")[0],
    "NC-NB": lambda runs, **kw: nuray_can(runs, "normal", "borda")[0],
    "NC-NC": lambda runs, **kw: nuray_can(runs, "normal", "condorcet")[0],
    "NC-BRP": lambda runs, **kw: nuray_can(runs, "bias", "rank_position")[0],
    "NC-BB": lambda runs, **kw: nuray_can(runs, "bias", "borda")[0],
    "NC-BC": lambda runs, **kw: nuray_can(runs, "bias", "condorcet")[0],
    "SPO-S": lambda runs, seed=0, **kw: spoerri(runs, "S", seed=seed),
    "SPO-A": lambda runs, seed=0, **kw: spoerri(runs, "A", seed=seed),
    "SPO-SA": lambda runs, seed=0, **kw: spoerri(runs, "S_minus_A", seed=seed),
    "SL": lambda runs, **kw: sakai_lin(runs)[0],
}

METHOD_NAMES: tuple[str, ...] = tuple(METHODS)


def run_method(name: str, runs: RunSet, seed: int = 0, **kw) -> PredictedMatrix:
    if name not in METHODS:
        raise ConfigError(f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}")
    if name.startswith("SPO") and len(runs.systems) % 5:
        raise ConfigError("SPO methods need a run count divisible by 5")
    return METHODS[name](runs, seed=seed, **kw)


def run_methods(names: Sequence[str], runs: RunSet, seed: int = 0) -> dict[str, PredictedMatrix]:
    return {name: run_method(name, runs, seed=seed) for name in names}
