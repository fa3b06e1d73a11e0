from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from benignsplit.hdbscan import (
    HdbscanParams, build_condensed_tree, build_mst, core_distances, extract_clusters,
    hdbscan_fit, mutual_reachability, select_clusters,
)
from benignsplit.metrics import adjusted_rand
from oracles import (
    core_distances as ref_core, distance_matrix, min_spanning_weight_exhaustive, mreach_matrix,
    reference_hdbscan, same_partition,
)

POINTS = np.array([[0.0], [1.0], [3.0], [7.0]])


def blobs(rng, centers, n=40, spread=0.3):
    return np.vstack([rng.normal(c, spread, size=(n, len(c))) for c in centers])


def test_core_distances_hand_example():
    core = core_distances(POINTS, 2)
    # second-nearest other point: 0->{1,3}, 1->{0,3}, 3->{1,0}, 7->{3,1}
    assert core.values.tolist() == [3.0, 2.0, 3.0, 6.0]
    assert core.k == 2


def test_core_distance_k1_is_nearest_neighbour(rng):
    X = rng.normal(size=(30, 3))
    D = distance_matrix(X)
    np.fill_diagonal(D, np.inf)
    assert np.allclose(core_distances(X, 1).values, D.min(axis=1))


def test_duplicate_pair_has_zero_core_distance():
    X = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
    assert core_distances(X, 1).values[:2].tolist() == [0.0, 0.0]


@pytest.mark.parametrize("k", [0, 4, 10])
def test_core_distance_k_out_of_range(k):
    with pytest.raises(ValueError):
        core_distances(POINTS, k)


def test_core_distance_rejects_empty():
    with pytest.raises(ValueError):
        core_distances(np.zeros((0, 2)), 1)


def test_mutual_reachability_hand_example():
    core = core_distances(POINTS, 2)
    assert mutual_reachability(core, POINTS, 0, 1) == 3.0


def test_mutual_reachability_with_zero_cores_is_distance():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 4.0], [3.0, 4.0]])
    core = core_distances(X, 1)
    assert mutual_reachability(core, X, 0, 2) == 5.0


def test_mutual_reachability_errors():
    core = core_distances(POINTS, 1)
    with pytest.raises(ValueError):
        mutual_reachability(core, POINTS, 1, 1)
    with pytest.raises(IndexError):
        mutual_reachability(core, POINTS, 0, 9)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(1, 3)),
              elements=st.floats(-50, 50, allow_nan=False)),
       st.integers(1, 2), st.data())
def test_mutual_reachability_dominates(X, k, data):
    core = core_distances(X, k)
    i = data.draw(st.integers(0, X.shape[0] - 1))
    j = data.draw(st.integers(0, X.shape[0] - 1).filter(lambda t: t != i))
    d = float(np.linalg.norm(X[i] - X[j]))
    m = mutual_reachability(core, X, i, j)
    assert m == mutual_reachability(core, X, j, i)
    assert m >= d - 1e-12 and m >= core.values[i] and m >= core.values[j] and d >= 0


def test_mst_three_points_matches_exhaustive():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    core = core_distances(X, 1)
    mst = build_mst(core, X)
    W = mreach_matrix(distance_matrix(X), ref_core(distance_matrix(X), 1))
    assert len(mst) == 2
    assert mst.total_weight == pytest.approx(min_spanning_weight_exhaustive(W), abs=1e-12)


def test_mst_collinear_is_chain():
    X = np.arange(6, dtype=float)[:, None]
    mst = build_mst(core_distances(X, 1), X)
    pairs = sorted(tuple(sorted(p)) for p in zip(mst.u.tolist(), mst.v.tolist()))
    assert pairs == [(i, i + 1) for i in range(5)]


def test_mst_two_points():
    X = np.array([[0.0], [2.5]])
    core = core_distances(X, 1)
    mst = build_mst(core, X)
    assert len(mst) == 1 and mst.weight[0] == mutual_reachability(core, X, 0, 1)


def test_mst_single_point_rejected():
    with pytest.raises(ValueError):
        build_mst(core_distances(np.zeros((2, 1)), 1), np.zeros((1, 1)))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(1, 2)),
              elements=st.floats(-10, 10, allow_nan=False).map(lambda v: round(v, 1))),
       st.integers(1, 3))
def test_mst_structure_and_weight(X, k):
    k = min(k, X.shape[0] - 1)
    core = core_distances(X, k)
    mst = build_mst(core, X)
    n = X.shape[0]
    assert len(mst) == n - 1
    assert np.all(np.diff(mst.weight) >= 0) and np.all(mst.weight >= 0)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a
    for u, v in zip(mst.u.tolist(), mst.v.tolist()):
        ru, rv = find(u), find(v)
        assert ru != rv, "cycle"
        parent[ru] = rv
    W = mreach_matrix(distance_matrix(X), ref_core(distance_matrix(X), k))
    assert mst.total_weight == pytest.approx(min_spanning_weight_exhaustive(W), abs=1e-9)


def test_condensed_tree_two_blobs(rng):
    X = blobs(rng, [(0, 0), (20, 20)])
    core = core_distances(X, 5)
    tree = build_condensed_tree(build_mst(core, X), HdbscanParams(5, 15))
    assert tree.children(0) == [1, 2]
    assert sorted(tree.size[[1, 2]].tolist()) == [40, 40]
    assert np.all(tree.lambda_death >= tree.lambda_birth) and np.all(tree.lambda_birth >= 0)
    assert tree.size[0] == X.shape[0]
    for c in range(1, tree.n_clusters):
        assert tree.size[c] >= 15
    assert "node,parent,lambda_birth" in tree.to_csv()


def test_condensed_tree_with_oversized_threshold(rng):
    X = rng.normal(size=(30, 2))
    tree = build_condensed_tree(build_mst(core_distances(X, 3), X), HdbscanParams(3, 31))
    assert tree.n_clusters == 1 and not tree.root_is_cluster
    assert (extract_clusters(tree).labels == -1).all()


def test_duplicates_get_finite_lambda_cap():
    X = np.array([[0.0], [0.0], [0.0], [1.0], [3.0]])
    tree = build_condensed_tree(build_mst(core_distances(X, 1), X), 2)
    assert np.isfinite(tree.point_lambda).all() and np.isfinite(tree.stability).all()
    assert tree.lambda_cap == pytest.approx(1.0)


def test_two_blobs_extracted_exactly(rng):
    X = blobs(rng, [(0, 0), (15, 0)])
    labels, _ = hdbscan_fit(X, HdbscanParams(5, 15))
    assert labels.n_clusters == 2 and labels.n_noise == 0
    truth = np.repeat([0, 1], 40)
    assert same_partition(labels.labels, truth)


def test_uniform_noise_large_threshold_all_noise(rng):
    X = rng.uniform(size=(60, 2))
    labels, _ = hdbscan_fit(X, HdbscanParams(5, 61))
    assert labels.n_noise == 60


def test_single_blob_is_one_cluster(rng):
    labels, _ = hdbscan_fit(rng.normal(size=(80, 2)), HdbscanParams(5, 10))
    assert labels.n_clusters == 1


def test_leaf_selection_stability_sum(rng):
    X = blobs(rng, [(0, 0), (15, 0), (0, 15)])
    tree = build_condensed_tree(build_mst(core_distances(X, 4), X), HdbscanParams(4, 15))
    selected = select_clusters(tree)
    leaves = tree.leaves()
    if set(np.flatnonzero(selected).tolist()) == set(leaves):
        assert tree.stability[selected].sum() == pytest.approx(tree.stability[leaves].sum())
    chosen = np.flatnonzero(selected)
    # selected clusters never nest
    for c in chosen:
        p = tree.parent[c]
        while p >= 0:
            assert p not in chosen
            p = tree.parent[p]


def test_label_numbering_by_size(rng):
    X = np.vstack([rng.normal((0, 0), 0.3, (25, 2)), rng.normal((20, 0), 0.3, (60, 2))])
    labels, _ = hdbscan_fit(X, HdbscanParams(4, 10))
    assert labels.n_clusters == 2
    sizes = labels.sizes()
    assert sizes[0] == 60 and sizes[1] == 25


def test_matches_reference_on_random_sets():
    for seed in range(5):
        r = np.random.default_rng(seed)
        X = np.vstack([blobs(r, [r.uniform(-8, 8, 2) for _ in range(3)], n=30, spread=0.6),
                       r.uniform(-10, 10, size=(15, 2))])
        got, _ = hdbscan_fit(X, HdbscanParams(4, 12))
        assert same_partition(got.labels, reference_hdbscan(X, 4, 12))


def test_permutation_only_renames(rng):
    X = np.vstack([blobs(rng, [(0, 0), (8, 8), (0, 9)], n=30, spread=0.8),
                   rng.uniform(-3, 12, size=(20, 2))])
    a, _ = hdbscan_fit(X, HdbscanParams(4, 10))
    perm = rng.permutation(X.shape[0])
    b, _ = hdbscan_fit(X[perm], HdbscanParams(4, 10))
    restored = np.empty_like(b.labels)
    restored[perm] = b.labels
    assert same_partition(a.labels, restored)
    assert adjusted_rand(a, restored) == 1.0


def test_noise_monotone_within_splitting_regime(rng):
    # three blobs plus scatter: every threshold here still splits the root,
    # so raising it can only push more points out of clusters
    X = np.vstack([blobs(rng, [(0, 0), (12, 0), (6, 10)], n=50, spread=0.7),
                   rng.uniform(-4, 16, size=(40, 2))])
    noise = []
    for mcs in range(5, 45, 3):
        labels, tree = hdbscan_fit(X, HdbscanParams(5, mcs))
        assert tree.children(0), "left the splitting regime"
        noise.append(labels.n_noise)
    assert all(b >= a for a, b in zip(noise, noise[1:]))
    labels, _ = hdbscan_fit(X, HdbscanParams(5, X.shape[0] + 1))
    assert labels.n_noise == X.shape[0] >= noise[-1]


def test_deterministic(rng):
    X = blobs(rng, [(0, 0), (5, 5)], spread=1.0)
    a, ta = hdbscan_fit(X, HdbscanParams(3, 8))
    b, tb = hdbscan_fit(X, HdbscanParams(3, 8))
    assert np.array_equal(a.labels, b.labels) and ta.to_csv() == tb.to_csv()


@pytest.mark.parametrize("metric", ["manhattan", "chebyshev"])
def test_other_metrics(rng, metric):
    X = blobs(rng, [(0, 0), (15, 0)])
    labels, _ = hdbscan_fit(X, HdbscanParams(5, 15, metric))
    assert labels.n_clusters == 2


def test_params_validation():
    with pytest.raises(ValueError):
        HdbscanParams(0, 10)
    with pytest.raises(ValueError):
        HdbscanParams(5, 1)
    with pytest.raises(ValueError):
        HdbscanParams(5, 10, "cosine")


def test_too_few_rows():
    with pytest.raises(ValueError):
        hdbscan_fit(np.zeros((3, 2)), HdbscanParams(5, 2))
