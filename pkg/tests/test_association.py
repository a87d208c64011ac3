import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lowcost_ir.association import (correlation, kendall_tau_b, kendall_tau_b_naive,
                                    krippendorff_alpha, matrix_delta, pairwise_agreement,
                                    rbo, rbo_p_for, rbo_scores, rbo_top_weight, spearman,
                                    tau_ap, tau_ap_bottom)
from lowcost_ir.errors import ConfigError, DataError, DegenerateError
from lowcost_ir.matrix import ApMatrix

KINDS = ("pearson", "kendall", "spearman", "tau_ap")
distinct = st.lists(st.integers(-1000, 1000), min_size=2, max_size=40, unique=True)


@pytest.mark.parametrize("kind", KINDS)
def test_identity_and_reversal(kind):
    x = np.array([0.1, 0.5, 0.3, 0.9, 0.7])
    assert correlation(kind, x, x) == pytest.approx(1.0)
    if kind in ("kendall", "spearman"):
        assert correlation(kind, x, -x) == pytest.approx(-1.0)


def test_unknown_kind_and_degenerate():
    with pytest.raises(ConfigError):
        correlation("foo", [1, 2], [1, 2])
    with pytest.raises(DegenerateError):
        correlation("pearson", [1, 1, 1], [1, 2, 3])
    with pytest.raises(DataError):
        correlation("pearson", [1.0], [1.0])


def test_kendall_fast_matches_naive_and_scipy(rng):
    for _ in range(200):
        n = int(rng.integers(2, 100))
        x = rng.integers(0, 6, n).astype(float)
        y = rng.integers(0, 6, n).astype(float)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        fast = kendall_tau_b(x, y)
        assert fast == kendall_tau_b_naive(x, y)
        assert fast == pytest.approx(scipy.stats.kendalltau(x, y).statistic, abs=1e-12)


@given(distinct, st.integers(0, 2**31))
def test_rank_measures_invariant_to_monotone_transform(xs, seed):
    x = np.array(xs, dtype=float)
    y = np.random.default_rng(seed).permutation(x)
    for f in (np.exp, lambda v: 3 * v + 1, np.cbrt):
        assert kendall_tau_b(f(x / 1000), y) == pytest.approx(kendall_tau_b(x, y), abs=1e-12)
        assert spearman(f(x / 1000), y) == pytest.approx(spearman(x, y), abs=1e-12)


def test_spearman_matches_scipy(rng):
    x, y = rng.integers(0, 5, 30), rng.normal(size=30)
    assert spearman(x, y) == pytest.approx(scipy.stats.spearmanr(x, y).statistic, abs=1e-12)


def test_tau_ap_reference_and_bottom():
    x = np.array([4.0, 3.0, 2.0, 1.0])
    assert tau_ap(x, x) == 1.0
    assert tau_ap(x, -x) == -1.0
    # swap at the top hurts more than a swap at the bottom
    top = tau_ap(np.array([3.0, 4.0, 2.0, 1.0]), x)
    bottom = tau_ap(np.array([4.0, 3.0, 1.0, 2.0]), x)
    assert top < bottom
    assert tau_ap_bottom(np.array([4.0, 3.0, 1.0, 2.0]), x) < \
        tau_ap_bottom(np.array([3.0, 4.0, 2.0, 1.0]), x)
    _, tied = tau_ap(x, np.array([1.0, 1.0, 0.0, 2.0]), return_tie_flag=True)
    assert tied


def test_rbo_examples():
    assert rbo(list("abcd"), list("abcd"), 0.9) == pytest.approx(1.0)
    # two items fully reversed: p^2 + (1-p)/p * p^2 = p
    assert rbo(["x", "y"], ["y", "x"], 0.9) == pytest.approx(0.9)
    assert rbo(list("abc"), list("acb"), 1e-9) == pytest.approx(1.0, abs=1e-6)
    assert rbo(list("abc"), list("bac"), 1e-9) < 1e-6
    with pytest.raises(ConfigError):
        rbo(list("ab"), list("ab"), 1.0)
    with pytest.raises(DataError):
        rbo(list("ab"), list("ac"), 0.5)


@given(st.permutations(list(range(12))), st.permutations(list(range(12))),
       st.floats(0.05, 0.95))
def test_rbo_symmetric_and_bounded(a, b, p):
    v = rbo(a, b, p)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(rbo(b, a, p), abs=1e-12)
    assert rbo(a, a, p) == pytest.approx(1.0)


def test_rbo_scores_bottom_heavy():
    x = np.array([5.0, 4.0, 3.0, 2.0, 1.0])
    y = np.array([4.0, 5.0, 3.0, 2.0, 1.0])
    assert rbo_scores(x, y, bottom_heavy=True) > rbo_scores(x, y)


def test_rbo_top_weight_reference():
    # a value commonly quoted for p = 0.9 and the first ten ranks
    assert rbo_top_weight(0.9, 10) == pytest.approx(0.8556, abs=1e-4)


def test_rbo_p_for_forward_check():
    p = rbo_p_for(0.10, 0.75, 129)
    assert 0 < p < 1
    assert rbo_top_weight(p, math.ceil(0.1 * 129)) == pytest.approx(0.75, abs=1e-6)
    with pytest.raises(ConfigError):
        rbo_p_for(0.1, 1.2, 129)


def test_rbo_p_for_whole_list_limit():
    # the whole list carries weight -> 1 only as p shrinks
    ps = [rbo_p_for(1.0, w, 20) for w in (0.9, 0.99, 0.999999, 1 - 1e-12)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert rbo_top_weight(ps[2], 20) == pytest.approx(0.999999, abs=1e-6)


def test_matrix_delta():
    a = ApMatrix(["s"], ["t1", "t2"], [[0.0, 1.0]])
    b = ApMatrix(["s"], ["t1", "t2"], [[1.0, 0.0]])
    assert matrix_delta(a, a) == 0.0
    assert matrix_delta(a, b) == 1.0
    with pytest.raises(DataError):
        matrix_delta(a, ApMatrix(["s"], ["t1"], [[0.0]]))


def delta_loop(a, b):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            total += abs(a[i, j] - b[i, j])
    return total / a.size


@given(st.integers(0, 2**31))
def test_matrix_delta_matches_loop(seed):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(1, 8, 2))
    va, vb = rng.random(shape), rng.random(shape)
    labels = ([f"s{i}" for i in range(shape[0])], [f"t{j}" for j in range(shape[1])])
    got = matrix_delta(ApMatrix(*labels, va), ApMatrix(*labels, vb))
    assert got == pytest.approx(delta_loop(va, vb), rel=1e-14, abs=1e-15)


def test_pairwise_agreement_examples():
    assert pairwise_agreement([0, 1], [10, 90]) == 1.0
    assert pairwise_agreement([0, 1], [90, 10]) == 0.0
    assert pairwise_agreement([0, 0, 1], [5, 10, 50]) == pytest.approx(2 / 3)


@given(distinct)
def test_pairwise_agreement_monotone_image(xs):
    x = np.array(xs, dtype=float)
    assert pairwise_agreement(x, np.exp(x / 1000)) == pytest.approx(1.0)


RELIABILITY = np.array([
    [1, 2, 3, 3, 2, 1, 4, 1, 2, np.nan, np.nan, np.nan],
    [1, 2, 3, 3, 2, 2, 4, 1, 2, 5, np.nan, 3],
    [np.nan, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, np.nan],
    [1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, np.nan],
])


@pytest.mark.parametrize("level,expected", [("nominal", 0.743), ("ordinal", 0.815),
                                            ("interval", 0.849)])
def test_krippendorff_reference_data(level, expected):
    assert krippendorff_alpha(RELIABILITY, level) == pytest.approx(expected, abs=5e-4)


def test_krippendorff_small_cases():
    assert krippendorff_alpha([[0, 1, 2, 1, 0], [0, 1, 2, 1, 0]]) == 1.0
    # o01 = o10 = 2, n = 4: alpha = 1 - (n - 1) * 4 / (2 * 2 * 2)
    assert krippendorff_alpha([[0, 1], [1, 0]], "nominal") == pytest.approx(-0.5)
    assert krippendorff_alpha([[1, 1], [1, 1]]) == 1.0
    with pytest.raises(DegenerateError):
        krippendorff_alpha([[1, np.nan], [np.nan, 2]])


@given(st.integers(0, 2**31))
def test_krippendorff_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 4, (4, 10)).astype(float)
    data[rng.random(data.shape) < 0.2] = np.nan
    data[:2, 0] = [1, 2]
    perm = data[rng.permutation(4)][:, rng.permutation(10)]
    for level in ("nominal", "ordinal", "interval"):
        assert krippendorff_alpha(perm, level) == pytest.approx(
            krippendorff_alpha(data, level), abs=1e-12)
