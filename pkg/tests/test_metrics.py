from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn import metrics as skm

from benignsplit.labels import ClusterLabels
from benignsplit.metrics import (
    adjusted_mutual_info, adjusted_rand, agreement, classification_report, expected_mutual_info,
    contingency, rbo, rbo_top_weight,
)
from oracles import ami_by_permutations, ari_by_pairs, rbo_top_weight_series

labelings = st.lists(st.integers(0, 4), min_size=2, max_size=30)


def test_report_perfect():
    r = classification_report(list("aabbc"), list("aabbc"))
    assert r.accuracy == 1.0 and all(v == 1.0 for v in r.f1.values())


def test_report_hand_confusion():
    r = classification_report(list("AABB"), list("ABAB"))
    assert r.accuracy == 0.5 and r.f1 == {"A": 0.5, "B": 0.5}
    assert r.confusion.tolist() == [[1, 1], [1, 1]]


def test_report_missing_prediction_flagged():
    r = classification_report(["A", "C", "C"], ["A", "A", "A"])
    assert "precision:C" in r.zero_division and r.recall["C"] == 0.0
    assert r.to_dict()["zero_division"] == sorted(r.zero_division)


def test_report_errors():
    with pytest.raises(ValueError):
        classification_report(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        classification_report([], [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("xyz"), st.sampled_from("xyzw")), min_size=1, max_size=40))
def test_report_consistency(pairs):
    truth, pred = zip(*pairs)
    r = classification_report(truth, pred)
    assert r.confusion.sum() == len(pairs)
    assert r.accuracy == pytest.approx(np.trace(r.confusion) / len(pairs))
    for d in (r.precision, r.recall, r.f1, r.macro, r.weighted):
        assert all(0 <= v <= 1 for v in d.values())
    ref = skm.precision_recall_fscore_support(truth, pred, labels=r.classes, zero_division=0)
    assert np.allclose(ref[2], [r.f1[c] for c in r.classes])


def test_ari_examples():
    assert adjusted_rand([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert adjusted_rand([0, 0, 1, 1], [0, 1, 0, 1]) == -0.5
    assert adjusted_rand(list(range(6)), list(range(6))) == 1.0


def test_ari_errors():
    with pytest.raises(ValueError):
        adjusted_rand([0, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        adjusted_rand([0], [0])


@settings(max_examples=60, deadline=None)
@given(labelings, st.data())
def test_ari_against_pair_oracle(a, data):
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    oracle_den = None
    try:
        oracle = ari_by_pairs(a, b)
    except ZeroDivisionError:
        oracle_den = 0
    got = adjusted_rand(a, b)
    if oracle_den is None:
        assert got == pytest.approx(oracle, abs=1e-12)
    assert got == pytest.approx(skm.adjusted_rand_score(a, b), abs=1e-12)
    assert got == adjusted_rand(b, a)


@settings(max_examples=60, deadline=None)
@given(labelings, st.data())
def test_ami_matches_reference_tool(a, data):
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    got = adjusted_mutual_info(a, b)
    assert got == pytest.approx(skm.adjusted_mutual_info_score(a, b), abs=1e-9)
    assert got == pytest.approx(adjusted_mutual_info(b, a), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(labelings, st.permutations(range(5)))
def test_identity_and_renaming(a, perm):
    renamed = [perm[x] for x in a]
    if len(set(a)) > 1:
        assert adjusted_rand(a, renamed) == 1.0
    assert adjusted_mutual_info(a, renamed) == pytest.approx(1.0, abs=1e-9)


def test_ami_hand_example_by_permutations():
    a, b = [0, 0, 1, 1], [0, 1, 0, 1]
    assert adjusted_mutual_info(a, b) == pytest.approx(ami_by_permutations(a, b), abs=1e-12)


def test_expected_mi_by_permutations():
    a, b = [0, 0, 1, 2, 2, 2], [0, 1, 1, 0, 1, 1]
    assert adjusted_mutual_info(a, b) == pytest.approx(ami_by_permutations(a, b), abs=1e-12)
    assert expected_mutual_info(contingency(a, b)) > 0


def test_ami_independent_near_zero():
    rng = np.random.default_rng(0)
    vals = [adjusted_mutual_info(rng.integers(0, 5, 1000), rng.integers(0, 5, 1000))
            for _ in range(100)]
    assert max(abs(v) for v in vals) < 0.05


def test_single_cluster_conventions():
    assert adjusted_mutual_info([0, 0, 0], [1, 1, 1]) == 1.0
    assert adjusted_rand([0, 0, 0], [1, 1, 1]) == 1.0


def test_noise_is_a_category():
    a = ClusterLabels(np.array([-1, -1, 0, 0, 1, 1]))
    b = ClusterLabels(np.array([5, 5, 0, 0, 1, 1]))
    scores = agreement(a, b)
    assert scores.ars == 1.0 and scores.ami == pytest.approx(1.0)
    assert scores.to_dict() == {"ami": 1.0, "ars": 1.0}


def test_rbo_identical_and_disjoint():
    assert rbo(list("abcdef"), list("abcdef")).rbo_ext == pytest.approx(1.0)
    r = rbo(list("abc"), list("xyz"))
    assert r.rbo_min == 0.0 and r.rbo_ext == 0.0


def test_rbo_errors():
    with pytest.raises(ValueError):
        rbo(["a", "a"], ["a", "b"])
    with pytest.raises(ValueError):
        rbo(["a"], ["a"], p=1.0)
    with pytest.raises(ValueError):
        rbo([], ["a"])


def test_top_weight_matches_series():
    for p, d in ((0.95, 10), (0.9, 5), (0.8, 3)):
        assert rbo_top_weight(p, d) == pytest.approx(rbo_top_weight_series(p, d), abs=1e-9)
    assert rbo_top_weight(0.95, 10) == pytest.approx(0.67, abs=0.01)


@settings(max_examples=60, deadline=None)
@given(st.permutations(list("abcdefghij")), st.permutations(list("abcdefghij")),
       st.floats(0.5, 0.99))
def test_rbo_bounds(a, b, p):
    r = rbo(a, b, p)
    assert 0 <= r.rbo_min <= r.rbo_ext + 1e-12 <= 1 + 1e-9


def test_rbo_grows_with_common_prefix():
    mins, exts = [], []
    for k in range(0, 8):
        shared = list("abcdefgh")[:k]
        a = shared + [f"a{i}" for i in range(8 - k)]
        b = shared + [f"b{i}" for i in range(8 - k)]
        r = rbo(a, b)
        mins.append(r.rbo_min)
        exts.append(r.rbo_ext)
    assert mins == sorted(mins) and exts == sorted(exts)
    assert mins[0] == 0.0
