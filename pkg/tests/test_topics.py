from collections import Counter
from itertools import combinations

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from lowcost_ir.association import kendall_tau_b
from lowcost_ir.errors import ConfigError, DataError, DegenerateError
from lowcost_ir.matrix import ApMatrix, PredictedMatrix
from lowcost_ir.subset_search import synth_matrix
from lowcost_ir.topics import (OUTCOMES, classify, hcluster, hits_hubness, inject_columns,
                               one_for_cluster, outcome_class, outcome_counts,
                               outcome_histogram_csv, paired_ttest, pca, wilcoxon_test)


def test_ttest_degenerate_cases():
    x = np.array([0.1, 0.2, 0.3])
    r = paired_ttest(x, x)
    assert r.degenerate and r.p_value == 1.0 and r.mean_diff == 0.0
    r = paired_ttest(x + 0.1, x)
    assert r.degenerate and r.p_value == 0.0


def test_ttest_table_value():
    # differences with t = 2.262 at 9 degrees of freedom sit at the 5% two-tailed point
    base = np.array([-1.5, -1.0, -0.6, -0.3, 0.0, 0.1, 0.3, 0.7, 1.0, 1.3])
    base = (base - base.mean()) / base.std(ddof=1)
    d = base + 2.262 / np.sqrt(10)
    r = paired_ttest(d, np.zeros(10))
    assert r.statistic == pytest.approx(2.262, abs=1e-9)
    assert r.p_value == pytest.approx(0.05, abs=1e-3)


@given(st.integers(0, 2**31))
def test_ttest_matches_scipy_and_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.random(12), rng.random(12)
    r = paired_ttest(x, y)
    ref = scipy.stats.ttest_rel(x, y)
    assert r.statistic == pytest.approx(ref.statistic, rel=1e-10)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-10)
    s = paired_ttest(y, x)
    assert s.statistic == pytest.approx(-r.statistic) and s.p_value == pytest.approx(r.p_value)


def test_wilcoxon_drops_zero_differences(rng):
    x = rng.random(15)
    y = x.copy()
    y[:10] += 0.05 * rng.random(10) + 0.01
    r = wilcoxon_test(x, y)
    assert r.p_value == pytest.approx(scipy.stats.wilcoxon(x[:10] - y[:10]).pvalue)
    assert wilcoxon_test(x, x).p_value == 1.0


def test_classify_definitions():
    assert classify(True, True, 1, 1) == "SSA"
    assert classify(True, True, 1, -1) == "SSD"
    assert classify(True, False, 1, 1) == "SN"
    assert classify(False, True, 1, 1) == "NS"
    assert classify(False, False, 1, 1) == "NN"


def test_outcome_class_subset_only_significant():
    # large consistent gain on the subset, noise elsewhere hides it on the full set
    rng = np.random.default_rng(0)
    xs = rng.random(10) * 0.1 + 0.5
    ys = xs - 0.2
    xg = np.concatenate([xs, rng.random(40)])
    yg = np.concatenate([ys, rng.random(40) + 0.3])
    assert outcome_class(xs, ys, xg, yg).outcome in ("SN", "SSD")
    o = outcome_class(xs, ys, xs, ys)
    assert o.outcome == "SSA"


def test_outcome_class_errors():
    with pytest.raises(ConfigError):
        outcome_class([1, 2], [2, 1], [1, 2], [2, 1], alpha=0)
    with pytest.raises(ConfigError):
        outcome_class([1, 2], [2, 1], [1, 2], [2, 1], test="z")


@settings(max_examples=30)
@given(st.integers(0, 2**31))
def test_full_set_gives_only_ssa_or_nn(seed):
    a = synth_matrix("gaussian", 8, 15, rng=seed)
    pairs = list(combinations(range(8), 2))
    counts = outcome_counts(a, np.ones(15, bool), pairs)
    assert counts["SN"] == counts["NS"] == counts["SSD"] == 0
    assert sum(counts.values()) == len(pairs)


def test_outcome_histogram_csv():
    text = outcome_histogram_csv({2: {"SSA": 1, "NN": 3}})
    lines = text.strip().splitlines()
    assert lines[0] == "cardinality," + ",".join(OUTCOMES)
    assert lines[1] == "2,0.25,0,0,0,0.75"


def test_pca_line():
    t = np.linspace(0, 1, 20)
    res = pca(np.column_stack([t, 2 * t + 1]), 0.99)
    assert res.k == 1 and res.explained_ratio[0] >= 1 - 1e-9


def test_pca_full_rank_properties(rng):
    x = rng.normal(size=(10, 4))
    res = pca(x, 1.0)
    assert res.explained_ratio.sum() == pytest.approx(1.0)
    assert np.all(np.diff(res.explained_ratio) <= 1e-12)
    recon = res.projected @ res.components.T + res.mean
    assert np.max(np.abs(recon - x)) <= 1e-9
    assert np.allclose(pdist(res.projected), pdist(x), atol=1e-9)


def test_pca_threshold_picks_smallest_k(rng):
    x = rng.normal(size=(30, 5)) * np.array([10, 5, 1, 0.1, 0.01])
    res = pca(x, 0.9)
    cum = np.cumsum(res.explained_ratio)
    assert cum[res.k - 1] >= 0.9 and (res.k == 1 or cum[res.k - 2] < 0.9)


def same_partition(a, b):
    return len(set(zip(a.tolist(), b.tolist()))) == len(set(a.tolist())) == len(set(b.tolist()))


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.sampled_from(["complete", "single", "average"]),
       st.sampled_from(["cosine", "euclidean"]))
def test_hcluster_matches_scipy(seed, method, metric):
    rng = np.random.default_rng(seed)
    x = rng.random((12, 3)) + 0.01
    m = int(rng.integers(2, 12))
    ours = hcluster(x, m, metric, method).assignment
    ref = fcluster(linkage(pdist(x, metric), method), m, "maxclust")
    if len(set(ref)) == m:  # scipy may be unable to hit m exactly on ties
        assert same_partition(ours, ref)


def test_hcluster_separated_clouds(rng):
    a = rng.normal([10, 0], 0.1, (8, 2))
    b = rng.normal([0, 10], 0.1, (6, 2))
    model = hcluster(np.vstack([a, b]), 2)
    assert model.assignment.tolist() == [0] * 8 + [1] * 6


def test_hcluster_singletons_and_duplicates():
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
    assert sorted(hcluster(x, 4).assignment.tolist()) == [0, 1, 2, 3]
    first = hcluster(x, 3).merges[0]
    assert {first[0], first[1]} == {0, 3} and first[2] == pytest.approx(0.0)


def test_hcluster_errors():
    with pytest.raises(DataError, match="PCA"):
        hcluster(np.array([[0.0, 0.0], [1.0, 1.0]]), 2)
    with pytest.raises(ConfigError):
        hcluster(np.eye(3), 1)
    with pytest.raises(ConfigError):
        hcluster(np.eye(3), 4)


def model_from_sizes(sizes):
    from lowcost_ir.topics import ClusterModel
    assignment = np.repeat(np.arange(len(sizes)), sizes)
    return ClusterModel(assignment, len(sizes), ())


def test_one_for_cluster_cases():
    model = model_from_sizes([3, 2, 2])
    mask = one_for_cluster(model, 3, 1)
    assert sorted(model.assignment[list(mask.indices)].tolist()) == [0, 1, 2]
    assert one_for_cluster(model, 7, 1).cardinality == 7
    for seed in range(20):
        assert one_for_cluster(model, 2, seed).cardinality == 2
    with pytest.raises(ConfigError):
        one_for_cluster(model, 0, 1)


def test_one_for_cluster_big_cluster_takes_the_rest():
    model = model_from_sizes([5, 1, 1])
    for seed in range(20):
        mask = one_for_cluster(model, 5, seed)
        assert Counter(model.assignment[list(mask.indices)].tolist()) == {0: 3, 1: 1, 2: 1}


def test_one_for_cluster_singletons_uniform():
    model = model_from_sizes([1] * 6)
    rng = np.random.default_rng(0)
    draws = Counter(one_for_cluster(model, 3, rng).indices for _ in range(10_000))
    assert len(draws) == 20
    observed = np.array([draws[s] for s in combinations(range(6), 3)])
    assert scipy.stats.chisquare(observed).pvalue > 1e-3


def test_hits_rank_one(rng):
    u, v = rng.random(7) + 0.1, rng.random(5) + 0.1
    hub, auth = hits_hubness(np.outer(u, v))
    assert np.allclose(hub, v / np.linalg.norm(v), atol=1e-8)
    assert np.allclose(auth, u / np.linalg.norm(u), atol=1e-8)


def test_hits_uniform_and_permutation(rng):
    hub, _ = hits_hubness(np.ones((4, 6)))
    assert np.allclose(hub, 1 / np.sqrt(6))
    a = rng.random((6, 5))
    perm = rng.permutation(5)
    assert np.allclose(hits_hubness(a[:, perm])[0], hits_hubness(a)[0][perm], atol=1e-8)


def test_hits_errors():
    with pytest.raises(DegenerateError):
        hits_hubness(np.zeros((3, 3)))
    with pytest.raises(DataError):
        hits_hubness(np.array([[1.0, -1.0]]))


def test_inject_columns(rng):
    systems, topics = [f"s{i}" for i in range(6)], [f"t{j}" for j in range(4)]
    real = ApMatrix(systems, topics, rng.random((6, 4)))
    art = PredictedMatrix(systems, topics, rng.random((6, 4)))
    full = inject_columns(art, real, topics)
    assert np.array_equal(full.values, real.values)
    assert kendall_tau_b(full.values.mean(1), real.values.mean(1)) == 1.0
    assert np.array_equal(inject_columns(art, real, []).values, art.values)
    half = inject_columns(art, real, ["t0", "t2"])
    for j, t in enumerate(topics):
        src = real if t in ("t0", "t2") else art
        assert np.array_equal(half.values[:, j], src.values[:, j])
    with pytest.raises(DataError):
        inject_columns(art, real, ["nope"])
