import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lowcost_ir.association import krippendorff_alpha
from lowcost_ir.collection import Qrels, parse_runs
from lowcost_ir.errors import ConfigError, DataError, ParseError
from lowcost_ir.scales import (FAMILIES, CutSpec, JudgementTable, TransformMethod, aggregate,
                               agreement_for_cuts, apply_cut, count_cuts, cut_array,
                               default_aggregate, evaluate_transformation, iter_cuts,
                               parse_judgements, pooled_agreement, select_best_cut,
                               synth_judgements, transform_judgements)


def test_aggregate_examples():
    nine = [1, 0, 1, 0, 1, 0, 1, 0, 1]
    assert aggregate(nine, "majority") == 1 == aggregate(nine, "median")
    for fn in ("mean", "median", "majority"):
        assert aggregate([7], fn) == 7
    assert aggregate([0, 10, 20], "mean") == 10
    assert aggregate([3, 1, 2, 4], "median") == 2
    assert aggregate([2, 2, 1, 1, 3], "majority") == 1
    with pytest.raises(DataError):
        aggregate([], "mean")
    with pytest.raises(ConfigError):
        aggregate([1], "mode")


@given(st.lists(st.integers(0, 1), min_size=1, max_size=15).filter(lambda v: len(v) % 2))
def test_binary_majority_equals_median(values):
    assert aggregate(values, "majority") == aggregate(values, "median")


def test_default_aggregate():
    assert [default_aggregate(n) for n in (2, 4, 101)] == ["majority", "median", "mean"]


def test_count_cuts_examples():
    assert count_cuts(4, 2) == 3
    assert count_cuts(101, 2) == 100
    assert count_cuts(101, 4) == 161700
    with pytest.raises(ConfigError):
        count_cuts(4, 4)


def test_count_cuts_matches_iterator():
    for s in range(3, 13):
        for t in range(2, s):
            cuts = list(iter_cuts(s, t))
            assert len(cuts) == count_cuts(s, t)
            assert cuts == sorted(cuts)
    assert cut_array(5, 3).shape == (6, 2)


def test_apply_cut_examples():
    middle = CutSpec((0, 3), 2, (1,))
    assert apply_cut(1, middle) == 0 and apply_cut(2, middle) == 1
    left = CutSpec((0, 3), 2, (0,))
    assert apply_cut(0, left) == 0 and apply_cut(1, left) == 1
    fine = CutSpec((0, 100), 4, (28, 58, 82))
    assert apply_cut(28, fine) == 0 and apply_cut(29, fine) == 1
    assert apply_cut(59, fine) == 2 and apply_cut(100, fine) == 3
    assert apply_cut(np.array([0, 58, 83]), fine).tolist() == [0, 1, 3]
    with pytest.raises(DataError):
        apply_cut(101, fine)


def test_cutspec_validation():
    with pytest.raises(ConfigError):
        CutSpec((0, 3), 3, (1, 1))
    with pytest.raises(ConfigError):
        CutSpec((0, 3), 2, (3,))
    with pytest.raises(ConfigError):
        CutSpec((0, 3), 3, (1,))
    assert CutSpec((0, 100), 4, (28, 58, 82)).label == "28-58-82"


@given(st.integers(0, 97).flatmap(lambda a: st.tuples(st.just(a), st.integers(a + 1, 98)))
       .flatmap(lambda ab: st.tuples(st.just(ab), st.integers(ab[1] + 1, 99))),
       st.integers(0, 100))
def test_cut_composition(abc, v):
    (a, b), c = abc
    fine = apply_cut(v, CutSpec((0, 100), 4, (a, b, c)))
    assert apply_cut(fine, CutSpec((0, 3), 2, (1,))) == apply_cut(v, CutSpec((0, 100), 2, (b,)))


@given(st.lists(st.integers(0, 99), min_size=1, max_size=5, unique=True),
       st.integers(0, 100), st.integers(0, 100))
def test_apply_cut_monotone(points, v1, v2):
    cut = CutSpec((0, 100), len(points) + 1, tuple(sorted(points)))
    lo, hi = sorted((v1, v2))
    assert apply_cut(lo, cut) <= apply_cut(hi, cut)


def test_judgement_table_contract():
    recs = [("w1", "t", "d1", 3, 1, 1), ("w1", "t", "d1", 2, 2, 1)]
    with pytest.raises(DataError, match="duplicate"):
        JudgementTable.from_records(recs, (0, 3))
    with pytest.raises(DataError):
        JudgementTable.from_records([("w", "t", "d", 5, 1, 1)], (0, 3))


def test_judgement_csv_round_trip():
    table, _ = synth_judgements((1, 2, 3), docs_per_level=2, judges=2, scale=(0, 5), rng=1)
    again = parse_judgements(table.to_csv(), table.scale)
    assert again.to_csv() == table.to_csv()
    with pytest.raises(ParseError):
        parse_judgements("a,b\n1,2\n")


# ---------------------------------------------------------------- brute-force oracle


def _nanmean(values):
    values = [v for v in values if not np.isnan(v)]
    return float(np.mean(values)) if values else np.nan


def _pair(a, b, level):
    return krippendorff_alpha(np.array([a, b], dtype=float), level)


def oracle_alpha(method, table, cut, target, topic):
    """Alpha of one cut by explicit loops over workers and documents."""
    t = cut.target_levels
    lo = table.scale[0]
    level = method.level
    rows = table.rows(topic)
    judg = {}
    for i in rows:
        judg.setdefault(table.docs[i], {})[table.workers[i]] = int(table.values[i])
    workers = sorted({table.workers[i] for i in rows})
    lv = lambda v: apply_cut(v, cut)  # noqa: E731
    fam = method.family
    if fam == "Tw_alpha1":
        grid = np.full((len(workers), len(judg)), np.nan)
        for k, d in enumerate(sorted(judg)):
            for w, v in judg[d].items():
                grid[workers.index(w), k] = lv(v)
        return krippendorff_alpha(grid, level)
    grades = target.for_topic(topic) if target is not None else {}
    if fam in ("D_a+t2", "D_t+a2"):
        a, b = [], []
        for d in sorted(set(judg) | set(grades)):
            vals = list(judg.get(d, {}).values()) or [lo]
            if fam == "D_a+t2":
                a.append(lv(aggregate(vals, method.source_agg)))
            else:
                a.append(aggregate([lv(v) for v in vals], method.target_agg))
            b.append(grades.get(d, 0))
        return _pair(a, b, level)
    per_worker = []
    for w in workers:
        a, b = [], []
        for d, by in sorted(judg.items()):
            if w not in by:
                continue
            if fam == "H2":
                a.append(lv(by[w]))
                b.append(grades.get(d, 0))
                continue
            others = [v for u, v in by.items() if u != w]
            if not others:
                continue
            a.append(lv(by[w]))
            if fam == "H_t+a1":
                b.append(aggregate([lv(v) for v in others], method.target_agg))
            else:
                b.append(lv(aggregate(others, method.source_agg)))
        if a:
            per_worker.append(_pair(a, b, level))
    return _nanmean(per_worker)


def random_table(seed, levels=10, workers=4, docs=6):
    rng = np.random.default_rng(seed)
    recs = []
    for d in range(docs):
        for w in range(workers):
            if rng.random() < 0.8:
                recs.append((f"w{w}", "t1", f"d{d}", int(rng.integers(0, levels)), 1, 1))
    recs.append(("w0", "t1", "dx", 0, 1, 1))
    recs.append(("w1", "t1", "dx", levels - 1, 1, 1))
    table = JudgementTable.from_records(recs, (0, levels - 1))
    target = Qrels({("t1", f"d{d}"): int(rng.integers(0, 3)) for d in range(2, docs + 2)},
                   (0, 2))
    return table, target


CONFIGS = [
    ("H_t+a1", "median", "median", "nominal"),
    ("H_t+a1", "median", "majority", "nominal"),
    ("H_a+t1", "mean", "median", "interval"),
    ("H_a+t1", "median", "median", "ordinal"),
    ("Tw_alpha1", "median", "median", "nominal"),
    ("Tw_alpha1", "median", "median", "interval"),
    ("H2", "median", "median", "nominal"),
    ("D_a+t2", "mean", "median", "nominal"),
    ("D_a+t2", "median", "median", "interval"),
    ("D_t+a2", "median", "majority", "nominal"),
    ("D_t+a2", "median", "median", "ordinal"),
]


@settings(max_examples=8)
@given(st.integers(0, 2**31))
def test_alpha_trace_matches_brute_force(seed):
    table, target = random_table(seed)
    for fam, s_agg, t_agg, level in CONFIGS:
        method = TransformMethod(fam, True, s_agg, t_agg, level)
        search = select_best_cut(method, table, 3, target)
        trace = search.trace["t1"]
        for k, pts in enumerate(search.cuts.tolist()):
            cut = CutSpec(table.scale, 3, tuple(pts))
            expected = oracle_alpha(method, table, cut, target, "t1")
            if np.isnan(expected):
                assert np.isnan(trace[k])
            else:
                assert trace[k] == pytest.approx(expected, abs=1e-10), (fam, pts)


def test_best_cut_ties_take_lowest():
    table, target = random_table(3)
    search = select_best_cut(TransformMethod("D_a+t2", source_agg="median"), table, 3, target)
    res = search.results["t1"]
    trace = search.trace["t1"]
    best = np.flatnonzero(trace == np.nanmax(trace))
    assert res.cut.points == tuple(search.cuts[best[0]].tolist())
    assert len(res.tied) == len(best)
    assert res.interval[0] == tuple(search.cuts[best].min(axis=0).tolist())


def test_planted_threshold_recovered():
    for t in (3, 10, 17):
        recs, entries = [], {}
        for d in range(20):
            v = d  # values 0..19 on a 0..19 scale
            entries[("q", f"d{d}")] = int(v > t)
            for w in range(3):
                recs.append((f"w{w}", "q", f"d{d}", v, 1, 1))
        table = JudgementTable.from_records(recs, (0, 19))
        search = select_best_cut(TransformMethod("D_a+t2"), table, 2, Qrels(entries, (0, 1)))
        assert search.cut_for("q").points == (t,)


def test_single_cut_uses_mean_alpha():
    t1, _ = synth_judgements((30, 60, 80), 5, 4, scale=(0, 100), topic="a", rng=1)
    t2, _ = synth_judgements((30, 60, 80), 5, 4, scale=(0, 100), topic="b", rng=2)
    recs = [(t.workers[i], t.topics[i], t.docs[i], int(t.values[i]), 1, 1)
            for t in (t1, t2) for i in range(len(t))]
    table = JudgementTable.from_records(recs, (0, 100))
    search = select_best_cut(TransformMethod("H_a+t1", per_topic=False), table, 2)
    assert set(search.results) == {"*"}
    mean = np.nanmean(np.vstack([search.trace["a"], search.trace["b"]]), axis=0)
    assert np.allclose(search.trace["*"], mean, equal_nan=True)
    assert search.cut_for("a") == search.cut_for("b")


def duplicate_workers(table):
    recs = []
    for i in range(len(table)):
        row = (table.topics[i], table.docs[i], int(table.values[i]), 1, 1)
        recs.append((table.workers[i], *row))
        recs.append((table.workers[i] + "-copy", *row))
    return JudgementTable.from_records(recs, table.scale)


@settings(max_examples=10)
@given(st.integers(0, 2**31))
def test_duplication_invariance(seed):
    table, target = random_table(seed)
    doubled = duplicate_workers(table)
    for fam in ("D_a+t2", "D_t+a2", "H2"):
        for s_agg in ("mean", "median", "majority"):
            method = TransformMethod(fam, source_agg=s_agg)
            a = select_best_cut(method, table, 3, target)
            b = select_best_cut(method, doubled, 3, target)
            assert np.allclose(a.trace["t1"], b.trace["t1"], equal_nan=True), (fam, s_agg)
            assert a.cut_for("t1") == b.cut_for("t1")


def test_unjudged_policies():
    recs = [(f"w{w}", "t", d, v, 1, 1) for w in range(3) for d, v in
            (("a", 0), ("b", 3), ("c", 1))]
    table = JudgementTable.from_records(recs, (0, 3))
    target = Qrels({("t", "a"): 0, ("t", "b"): 1}, (0, 1))
    with pytest.raises(DataError, match="unjudged"):
        select_best_cut(TransformMethod("D_a+t2", unjudged="error"), table, 2, target)
    drop = select_best_cut(TransformMethod("D_a+t2", unjudged="drop"), table, 2, target)
    assume = select_best_cut(TransformMethod("D_a+t2", unjudged="assume"), table, 2, target)
    # without "c" every cut separates a from b; with c assumed non-relevant it must map to 0
    assert drop.cut_for("t").points == (0,) and len(drop.results["t"].tied) == 3
    assert assume.cut_for("t").points == (1,)


def test_target_families_need_target():
    table, _ = random_table(0)
    for fam in ("H2", "D_a+t2", "D_t+a2"):
        with pytest.raises(ConfigError):
            select_best_cut(TransformMethod(fam), table, 2)
    with pytest.raises(ConfigError):
        TransformMethod("D_t+a2", target_agg="mean")
    with pytest.raises(ConfigError):
        TransformMethod("nope")
    assert set(FAMILIES) >= {"H2", "Tw_alpha1"}


def test_budget_guard():
    table, _ = synth_judgements((28, 58, 82), 2, 2, rng=0)
    with pytest.raises(ConfigError, match="budget"):
        select_best_cut(TransformMethod("Tw_alpha1"), table, 4, max_cuts=1000)


def test_agreement_and_pooled_for_named_cuts():
    src = Qrels({("t", "a"): 0, ("t", "b"): 1, ("t", "c"): 2, ("t", "d"): 3}, (0, 3))
    table = JudgementTable.from_qrels(src)
    target = Qrels({("t", "a"): 0, ("t", "b"): 1, ("t", "c"): 1, ("t", "d"): 1}, (0, 1))
    cuts = [CutSpec((0, 3), 2, (p,)) for p in (0, 1, 2)]
    pooled = pooled_agreement(table, target, cuts)
    assert pooled[0] == pytest.approx(1.0)
    assert pooled[0] > pooled[1] > pooled[2]
    per_topic = agreement_for_cuts(TransformMethod("D_a+t2"), table, cuts, target)
    assert np.allclose(per_topic["t"], pooled)


def test_transform_orders():
    recs = [("w1", "t", "d", 10, 1, 1), ("w2", "t", "d", 60, 1, 1), ("w3", "t", "d", 70, 1, 1)]
    table = JudgementTable.from_records(recs, (0, 100))
    cut = CutSpec((0, 100), 2, (50,))
    assert transform_judgements(table, cut, "a+t", "mean").entries[("t", "d")] == 0
    assert transform_judgements(table, cut, "t+a").entries[("t", "d")] == 1
    q = transform_judgements(table, {"t": cut})
    assert q.scale == (0, 1)
    with pytest.raises(ConfigError):
        transform_judgements(table, cut, "t+a", "mean")
    with pytest.raises(ConfigError):
        transform_judgements(table, CutSpec((0, 3), 2, (1,)))


def toy_runs_for_eval():
    lines = []
    orders = {"s1": ["a", "b", "c"], "s2": ["b", "c", "a"], "s3": ["c", "a", "b"]}
    for s, docs in orders.items():
        for r, d in enumerate(docs, 1):
            lines.append(f"t Q0 {d} {r} {4 - r}.0 {s}")
    return parse_runs("\n".join(lines))


def test_evaluate_transformation_identity_and_reversal():
    runs = toy_runs_for_eval()
    expert = Qrels({("t", "a"): 3, ("t", "b"): 2, ("t", "c"): 1}, (0, 3))
    assert evaluate_transformation(expert, expert, runs) == pytest.approx(1.0)
    adversarial = Qrels({("t", "a"): 1, ("t", "b"): 2, ("t", "c"): 3}, (0, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert evaluate_transformation(adversarial, expert, runs, "NDCG@1") == \
            pytest.approx(-1.0)


def test_synth_judgements_shape():
    table, latent = synth_judgements((28, 58, 82), docs_per_level=3, judges=4, rng=5)
    assert len(table) == 4 * 4 * 3
    assert sorted(set(latent.entries.values())) == [0, 1, 2, 3]
    assert table.scale == (0, 100)
