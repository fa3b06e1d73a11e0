"""Slow, independent reference implementations used only by the tests.

Nothing here shares code with the package under test.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------- distances / MST

def distance_matrix(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j])))
    return D


def core_distances(D: np.ndarray, k: int) -> np.ndarray:
    return np.array([sorted(np.delete(D[i], i))[k - 1] for i in range(D.shape[0])])


def mreach_matrix(D: np.ndarray, core: np.ndarray) -> np.ndarray:
    R = np.maximum(D, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(R, 0.0)
    return R


def prim_weight(W: np.ndarray) -> float:
    """Plain textbook Prim scanning every cut edge at each step."""
    n = W.shape[0]
    inside = {0}
    total = 0.0
    while len(inside) < n:
        best = min((W[i, j], i, j) for i in inside for j in range(n) if j not in inside)
        total += best[0]
        inside.add(best[2])
    return total


def prim_edges(W: np.ndarray) -> list[tuple[int, int, float]]:
    n = W.shape[0]
    inside = [False] * n
    inside[0] = True
    best = W[0].copy()
    src = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = [j for j in range(n) if not inside[j]]
        j = min(cand, key=lambda t: (best[t], t))
        edges.append((int(src[j]), j, float(best[j])))
        inside[j] = True
        for t in range(n):
            if not inside[t] and W[j, t] < best[t]:
                best[t] = W[j, t]
                src[t] = j
    return edges


def prufer_trees(n: int):
    """Every labelled spanning tree of K_n, via Prüfer sequences."""
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for s in seq:
            degree[s] += 1
        edges = []
        for s in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, s))
            degree[leaf] -= 1
            degree[s] -= 1
        u, v = [i for i in range(n) if degree[i] == 1]
        edges.append((u, v))
        yield edges


def min_spanning_weight_exhaustive(W: np.ndarray) -> float:
    return min(sum(W[u, v] for u, v in t) for t in prufer_trees(W.shape[0]))


# ---------------------------------------------------------------- HDBSCAN, top-down

def _components(nodes: list[int], edges: list[tuple[int, int, float]]) -> list[list[int]]:
    adj = {p: [] for p in nodes}
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen, comps = set(), []
    for p in nodes:
        if p in seen:
            continue
        comp, stack = [], [p]
        seen.add(p)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def reference_hdbscan(X: np.ndarray, min_samples: int, min_cluster_size: int) -> np.ndarray:
    """Brute force: exact distances, Prim, then top-down cutting of the MST.

    The hierarchy is read off by repeatedly deleting the heaviest remaining
    edges of each cluster, which is equivalent to single linkage read in
    reverse. Labels are returned in arbitrary numbering (-1 = noise).
    """
    n = X.shape[0]
    D = distance_matrix(X)
    W = mreach_matrix(D, core_distances(D, min_samples))
    edges = prim_edges(W)
    positive = [w for _, _, w in edges if w > 0]
    cap = 1.0 / min(positive) if positive else 1.0

    def lam(w):
        return 1.0 / w if w > 0 else cap

    clusters = []  # dicts: parent, birth, points_out [(p, lambda)], children

    def grow(points, cedges, parent, birth):
        cid = len(clusters)
        clusters.append({"parent": parent, "birth": birth, "out": [], "children": [],
                         "size": len(points)})
        while True:
            if not cedges:
                clusters[cid]["out"] += [(p, birth) for p in points]
                return cid
            w = max(e[2] for e in cedges)
            level = lam(w)
            kept = [e for e in cedges if e[2] < w]
            comps = _components(points, kept)
            big = [c for c in comps if len(c) >= min_cluster_size]
            for c in comps:
                if len(c) < min_cluster_size:
                    clusters[cid]["out"] += [(p, level) for p in c]
            if len(big) == 1:
                points = big[0]
                members = set(points)
                cedges = [e for e in kept if e[0] in members]
                continue
            for c in big:
                members = set(c)
                child = grow(c, [e for e in kept if e[0] in members], cid, level)
                clusters[cid]["children"].append(child)
            return cid

    grow(list(range(n)), edges, -1, 0.0)

    def stability(c):
        node = clusters[c]
        s = sum(lv - node["birth"] for _, lv in node["out"])
        s += sum(clusters[k]["size"] * (clusters[k]["birth"] - node["birth"])
                 for k in node["children"])
        return s

    def best(c):
        """(score, selected cluster ids) for the subtree under c."""
        kids = clusters[c]["children"]
        if not kids:
            if c == 0:
                return 0.0, ([0] if n >= min_cluster_size else [])
            return stability(c), [c]
        parts = [best(k) for k in kids]
        below = sum(p[0] for p in parts)
        chosen = [x for p in parts for x in p[1]]
        if c != 0 and stability(c) > below:
            return stability(c), [c]
        return below, chosen

    _, selected = best(0)

    def subtree_points(c):
        pts = [p for p, _ in clusters[c]["out"]]
        for k in clusters[c]["children"]:
            pts += subtree_points(k)
        return pts

    labels = np.full(n, -1)
    for lab, c in enumerate(selected):
        labels[subtree_points(c)] = lab
    return labels


def same_partition(a, b) -> bool:
    """Equal up to renaming of labels (noise -1 kept as its own label)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    fwd, bwd = {}, {}
    for x, y in zip(a.tolist(), b.tolist()):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    return fwd.get(-1, -1) == -1 and bwd.get(-1, -1) == -1


# ---------------------------------------------------------------- clustering agreement

def ari_by_pairs(a, b) -> float:
    """Adjusted Rand by explicit pair enumeration."""
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    both = sum(1 for i, j in pairs if a[i] == a[j] and b[i] == b[j])
    in_a = sum(1 for i, j in pairs if a[i] == a[j])
    in_b = sum(1 for i, j in pairs if b[i] == b[j])
    expected = in_a * in_b / len(pairs)
    top = (in_a + in_b) / 2
    return (both - expected) / (top - expected)


def _mi(a, b) -> float:
    n = len(a)
    total = 0.0
    for x in set(a):
        for y in set(b):
            nij = sum(1 for p, q in zip(a, b) if p == x and q == y)
            if nij:
                ni = a.count(x)
                nj = b.count(y)
                total += nij / n * math.log(n * nij / (ni * nj))
    return total


def _h(a) -> float:
    n = len(a)
    return -sum(a.count(x) / n * math.log(a.count(x) / n) for x in set(a))


def ami_by_permutations(a, b) -> float:
    """AMI with E[MI] averaged over every permutation of ``b``."""
    a, b = list(a), list(b)
    perms = list(itertools.permutations(b))
    emi = sum(_mi(a, list(p)) for p in perms) / len(perms)
    return (_mi(a, b) - emi) / ((_h(a) + _h(b)) / 2 - emi)


# ---------------------------------------------------------------- RBO

def rbo_top_weight_series(p: float, depth: int, terms: int = 20000) -> float:
    """Share of weight in the first ``depth`` ranks, summing the RBO weights
    of an infinite ranking numerically."""
    # weight of rank i is (1-p)/p * sum_{d>=i} p^d / d
    tail = [0.0] * (terms + 2)
    for d in range(terms, 0, -1):
        tail[d] = tail[d + 1] + p ** d / d
    return sum((1 - p) / p * tail[i] for i in range(1, depth + 1))


# ---------------------------------------------------------------- KDE

def gaussian_kde(x, data, h) -> float:
    return float(sum(math.exp(-sum((a - b) ** 2 for a, b in zip(x, row)) / (2 * h * h))
                     for row in data))
