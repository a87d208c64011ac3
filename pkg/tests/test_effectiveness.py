import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lowcost_ir.collection import Qrels, build_ap_matrix
from lowcost_ir.effectiveness import (aggregate_cols, aggregate_rows, average_precision, ndcg,
                                      wmap)
from lowcost_ir.errors import ConfigError, DegenerateError
from lowcost_ir.matrix import ApMatrix


def ap_oracle(rels, n_rel):
    hits, total = 0, 0.0
    for i, r in enumerate(rels, 1):
        if r:
            hits += 1
            total += hits / i
    return total / n_rel


def ndcg_oracle(gains, all_gains, k):
    dcg = sum(g / math.log2(i + 2) for i, g in enumerate(gains[:k]))
    ideal = sorted(all_gains, reverse=True)[:k]
    return dcg / sum(g / math.log2(i + 2) for i, g in enumerate(ideal))


def test_ap_examples():
    assert average_precision(["a"], {"a": 1}) == 1.0
    assert average_precision(["a", "b", "c"], {"a": 1, "c": 1}) == pytest.approx(0.8333333333)
    assert average_precision(["x", "y"], {"a": 1}) == 0.0
    with pytest.raises(DegenerateError):
        average_precision(["a"], {"a": 0})


def test_ndcg_examples():
    assert ndcg(["a", "b"], {"a": 0, "b": 2}, k=2) == pytest.approx(0.6309, abs=1e-4)
    assert ndcg(["b", "a"], {"a": 1, "b": 2}) == pytest.approx(1.0)
    assert ndcg(["b", "a"], {"a": 1, "b": 2}, k=1) == pytest.approx(1.0)
    with pytest.raises(DegenerateError):
        ndcg(["a"], {"a": 0})


def test_ap_ignores_content_below_k():
    g = {"a": 1, "b": 1, "z": 1}
    assert average_precision(["a", "x", "b", "z"], g, k=3) == \
        average_precision(["a", "x", "b", "q"], g, k=3)


def test_row_aggregates():
    a = ApMatrix(["s"], ["t1", "t2"], [[0.3, 0.3]])
    assert aggregate_rows(a, "MAP").values[0] == pytest.approx(0.3)
    assert aggregate_rows(a, "GMAP").values[0] == pytest.approx(0.3)
    assert aggregate_rows(a, "logitMAP").values[0] == pytest.approx(math.log(3 / 7))
    b = ApMatrix(["s"], ["t1", "t2"], [[0.05, 0.5]])
    assert aggregate_rows(b, "GMAP").values[0] == pytest.approx(0.1581, abs=1e-4)
    z = ApMatrix(["s"], ["t1", "t2"], [[0.0, 0.5]])
    assert aggregate_rows(z, "GMAP").values[0] > 0
    with pytest.raises(ConfigError):
        aggregate_rows(a, "AAP")


def test_col_aggregates():
    a = ApMatrix(["s1", "s2"], ["t"], [[0.2], [0.4]])
    assert aggregate_cols(a, "AAP").values[0] == pytest.approx(0.3)
    assert aggregate_cols(a, "GAAP").values[0] == pytest.approx(math.sqrt(0.08))
    z = ApMatrix(["s1", "s2"], ["t"], [[0.0], [0.0]])
    assert aggregate_cols(z, "AAP").values[0] == 0.0
    assert aggregate_cols(z, "GAAP").values[0] == pytest.approx(1e-5)


def test_wmap():
    a = ApMatrix(["s"], ["t1", "t2"], [[0.0, 0.4]])
    assert wmap(a, [1, 3]).values[0] == pytest.approx(0.3)
    assert wmap(a, [1, 1]).values[0] == pytest.approx(aggregate_rows(a).values[0])
    assert wmap(a, [0, 1]).values[0] == pytest.approx(0.4)
    with pytest.raises(ConfigError):
        wmap(a, [0, 0])


cells = arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
               elements=st.floats(0, 1))


@given(cells)
def test_grand_mean_identity(v):
    a = ApMatrix([f"s{i}" for i in range(v.shape[0])], [f"t{j}" for j in range(v.shape[1])], v)
    g = v.mean()
    assert abs(aggregate_rows(a).values.mean() - g) <= 1e-12
    assert abs(aggregate_cols(a).values.mean() - g) <= 1e-12
    # AM-GM holds once zero cells are floored at the same epsilon GMAP uses
    floored = ApMatrix(a.systems, a.topics, np.maximum(v, 1e-5))
    assert np.all(aggregate_rows(floored, "GMAP").values
                  <= aggregate_rows(floored).values + 1e-12)


@given(st.integers(0, 2**31))
def test_ap_ndcg_match_oracles(seed):
    rng = np.random.default_rng(seed)
    docs = [f"d{i}" for i in range(12)]
    grades = {d: int(rng.integers(0, 4)) for d in docs}
    if not any(grades.values()):
        grades["d0"] = 1
    ranked = list(rng.permutation(docs)[: rng.integers(1, 12)])
    k = int(rng.integers(1, 13))
    n_rel = sum(g > 0 for g in grades.values())
    assert abs(average_precision(ranked, grades, k=k)
               - ap_oracle([grades[d] > 0 for d in ranked[:k]], n_rel)) <= 1e-12
    assert abs(ndcg(ranked, grades, k=k)
               - ndcg_oracle([grades[d] for d in ranked], list(grades.values()), k)) <= 1e-12


def test_ndcg_one_iff_sorted():
    g = {"a": 3, "b": 2, "c": 1}
    assert ndcg(["a", "b", "c"], g) == pytest.approx(1.0)
    assert ndcg(["b", "a", "c"], g) < 1.0


def test_batched_matrix_matches_scalar(toy_runs, toy_qrels):
    a = build_ap_matrix(toy_runs, toy_qrels)
    for i, s in enumerate(a.systems):
        for j, t in enumerate(a.topics):
            assert a.values[i, j] == pytest.approx(
                average_precision(toy_runs.ranked(s, t), toy_qrels, t), abs=1e-12)
    n = build_ap_matrix(toy_runs, toy_qrels, "NDCG@2")
    assert n.values[2, 0] == pytest.approx(ndcg(toy_runs.ranked("C", "1"), toy_qrels, "1", k=2))
