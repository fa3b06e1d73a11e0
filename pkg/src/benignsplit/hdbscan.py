"""HDBSCAN on a dense feature matrix.

Exact O(n^2) pipeline: core distances, mutual reachability, Prim's MST on
the implicit complete graph, single-linkage hierarchy, condensed tree and
stability-based cluster selection. There is no spatial index, so memory
stays O(n) but time grows quadratically; subsample above a few tens of
thousands of rows.

Equal-weight MST edges are merged simultaneously, which makes the
hierarchy independent of which minimum spanning tree Prim happens to pick.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from benignsplit.labels import NOISE, ClusterLabels, renumber_by_size

METRICS = ("euclidean", "manhattan", "chebyshev")
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class HdbscanParams:
    min_samples: int = 500
    min_cluster_size: int = 10000
    metric: str = "euclidean"

    def __post_init__(self):
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; choose from {METRICS}")


@dataclass(frozen=True)
class CoreDistances:
    values: np.ndarray
    k: int

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class MstEdgeList:
    u: np.ndarray
    v: np.ndarray
    weight: np.ndarray
    n_points: int

    def __len__(self):
        return self.weight.size

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())


@dataclass(frozen=True)
class CondensedTree:
    """Cluster hierarchy after pruning splits smaller than min_cluster_size.

    Cluster 0 is the root. ``point_cluster[p]`` is the cluster point ``p``
    fell out of and ``point_lambda[p]`` the density level (1/distance) at
    which it left.
    """

    parent: np.ndarray
    lambda_birth: np.ndarray
    lambda_death: np.ndarray
    size: np.ndarray
    stability: np.ndarray
    point_cluster: np.ndarray
    point_lambda: np.ndarray
    min_cluster_size: int
    lambda_cap: float

    @property
    def n_clusters(self) -> int:
        return self.parent.size

    @property
    def n_points(self) -> int:
        return self.point_cluster.size

    @property
    def root_is_cluster(self) -> bool:
        return self.n_points >= self.min_cluster_size

    def children(self, c: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.parent == c)]

    def leaves(self) -> list[int]:
        has_child = np.zeros(self.n_clusters, dtype=bool)
        has_child[self.parent[self.parent >= 0]] = True
        return [int(c) for c in np.flatnonzero(~has_child)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("node,parent,lambda_birth,lambda_death,size,stability\n")
        for c in range(self.n_clusters):
            buf.write(f"{c},{int(self.parent[c])},{float(self.lambda_birth[c])!r},"
                      f"{float(self.lambda_death[c])!r},{int(self.size[c])},"
                      f"{float(self.stability[c])!r}\n")
        return buf.getvalue()


def _as_array(data) -> np.ndarray:
    values = getattr(data, "values", data)
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("data must be a 2-D matrix")
    return arr


def pairwise_block(a: np.ndarray, b: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Distances between every row of ``a`` and every row of ``b``.

    Computed from coordinate differences (not the dot-product expansion) so
    d(i, j) and d(j, i) are bitwise equal.
    """
    diff = a[:, None, :] - b[None, :, :]
    if metric == "euclidean":
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "manhattan":
        return np.abs(diff).sum(axis=2)
    if metric == "chebyshev":
        return np.abs(diff).max(axis=2) if diff.shape[2] else np.zeros(diff.shape[:2])
    raise ValueError(f"unknown metric {metric!r}")


def _row_chunks(n: int, d: int):
    step = max(1, _CHUNK_ELEMENTS // max(1, n * max(d, 1)))
    for start in range(0, n, step):
        yield start, min(n, start + step)


def core_distances(data, k: int, metric: str = "euclidean") -> CoreDistances:
    """Distance from each point to its k-th nearest other point."""
    X = _as_array(data)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty data")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range for {n} points (need 1 <= k <= n-1)")
    out = np.empty(n)
    for lo, hi in _row_chunks(n, X.shape[1]):
        block = pairwise_block(X[lo:hi], X, metric)
        # sorted row position 0 is the point itself (distance 0)
        out[lo:hi] = np.partition(block, k, axis=1)[:, k]
    return CoreDistances(out, k)


def mutual_reachability(core: CoreDistances, data, i: int, j: int,
                        metric: str = "euclidean") -> float:
    X = _as_array(data)
    n = X.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"index out of range for {n} points")
    if i == j:
        raise ValueError("mutual reachability needs two distinct points")
    d = float(pairwise_block(X[i:i + 1], X[j:j + 1], metric)[0, 0])
    return max(float(core.values[i]), float(core.values[j]), d)


def build_mst(core: CoreDistances, data, metric: str = "euclidean") -> MstEdgeList:
    """Prim's algorithm over the complete mutual-reachability graph.

    O(n^2) time, O(n) memory. Ties go to the lowest point index. Edges are
    returned sorted by (weight, u, v) with u < v.
    """
    X = _as_array(data)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points for a spanning tree")
    cd = core.values
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    u = np.empty(n - 1, dtype=np.int64)
    v = np.empty(n - 1, dtype=np.int64)
    w = np.empty(n - 1)
    current = 0
    for step in range(n - 1):
        in_tree[current] = True
        d = pairwise_block(X[current:current + 1], X, metric)[0]
        mr = np.maximum(np.maximum(d, cd), cd[current])
        better = (mr < best) & ~in_tree
        best[better] = mr[better]
        parent[better] = current
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))
        a, b = int(parent[nxt]), nxt
        u[step], v[step], w[step] = min(a, b), max(a, b), best[nxt]
        current = nxt
    order = np.lexsort((v, u, w))
    return MstEdgeList(u[order], v[order], w[order], n)


class _UnionFind:
    """Union-find keeping the lowest index as root; ``parent`` may be a list
    (dense ids) or a dict (sparse ids, filled on demand)."""

    def __init__(self, n: int | None = None):
        self.parent = list(range(n)) if n is not None else {}

    def find(self, x: int) -> int:
        parent = self.parent
        if isinstance(parent, dict) and x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra


def single_linkage(mst: MstEdgeList):
    """Multi-way single-linkage dendrogram from MST edges.

    Nodes 0..n-1 are points. Each internal node merges every component
    joined by the edges of one weight level. Returns ``(children, level,
    size)`` lists indexed by node id; the last node is the root.
    """
    n = mst.n_points
    children: list[list[int]] = [[] for _ in range(n)]
    level = [0.0] * n
    size = [1] * n
    uf = _UnionFind(n)
    comp_node = list(range(n))
    weights = mst.weight
    i = 0
    while i < weights.size:
        j = i
        while j < weights.size and weights[j] == weights[i]:
            j += 1
        pairs = [(uf.find(int(mst.u[e])), uf.find(int(mst.v[e]))) for e in range(i, j)]
        local = _UnionFind()
        roots = set()
        for a, b in pairs:
            local.union(a, b)
            roots.update((a, b))
        groups: dict[int, list[int]] = {}
        for r in sorted(roots):
            groups.setdefault(local.find(r), []).append(r)
        for members in groups.values():
            node = len(children)
            children.append([comp_node[r] for r in members])
            level.append(float(weights[i]))
            size.append(sum(size[comp_node[r]] for r in members))
            root = members[0]
            for r in members[1:]:
                root = uf.union(root, r)
            comp_node[uf.find(root)] = node
        i = j
    return children, level, size


def _lambda_cap(weights: np.ndarray) -> float:
    positive = weights[weights > 0]
    return 1.0 / float(positive.min()) if positive.size else 1.0


def build_condensed_tree(mst: MstEdgeList, params: HdbscanParams | int) -> CondensedTree:
    """Condense the single-linkage hierarchy and score cluster stability.

    A split where fewer than two sides reach ``min_cluster_size`` is not a
    split: the small sides' points fall out of the current cluster at that
    level. Zero distances map to a finite density cap of 1/(smallest
    positive edge weight).
    """
    mcs = params if isinstance(params, int) else params.min_cluster_size
    n = mst.n_points
    children, level, size = single_linkage(mst)
    cap = _lambda_cap(mst.weight)

    def lam(node: int) -> float:
        w = level[node]
        return 1.0 / w if w > 0 else cap

    def points_under(node: int) -> list[int]:
        out, stack = [], [node]
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                stack.extend(children[x])
        return out

    c_parent, c_birth, c_death, c_size = [-1], [0.0], [0.0], [n]
    point_cluster = np.full(n, -1, dtype=np.int64)
    point_lambda = np.zeros(n)
    stack = [(len(children) - 1, 0)]
    while stack:
        node, cid = stack.pop()
        while True:
            lv = lam(node)
            kids = children[node]
            big = [k for k in kids if size[k] >= mcs]
            for k in kids:
                if size[k] < mcs:
                    pts = points_under(k)
                    point_cluster[pts] = cid
                    point_lambda[pts] = lv
            if len(big) == 1:
                node = big[0]
                continue
            c_death[cid] = lv
            for k in big:
                c_parent.append(cid)
                c_birth.append(lv)
                c_death.append(lv)
                c_size.append(size[k])
                stack.append((k, len(c_parent) - 1))
            break

    parent = np.array(c_parent, dtype=np.int64)
    birth = np.array(c_birth)
    stability = np.zeros(parent.size)
    np.add.at(stability, point_cluster, point_lambda - birth[point_cluster])
    for c in range(1, parent.size):
        p = parent[c]
        stability[p] += c_size[c] * (birth[c] - birth[p])
    return CondensedTree(
        parent=parent, lambda_birth=birth, lambda_death=np.array(c_death),
        size=np.array(c_size, dtype=np.int64), stability=stability,
        point_cluster=point_cluster, point_lambda=point_lambda,
        min_cluster_size=mcs, lambda_cap=cap,
    )


def select_clusters(tree: CondensedTree) -> np.ndarray:
    """Boolean mask of selected clusters.

    Bottom-up: a cluster replaces its selected descendants iff its own
    stability strictly exceeds theirs. The root is only eligible when it
    never splits (and holds at least min_cluster_size points).
    """
    k = tree.n_clusters
    selected = np.zeros(k, dtype=bool)
    best = np.zeros(k)
    kids: list[list[int]] = [[] for _ in range(k)]
    for c in range(1, k):
        kids[tree.parent[c]].append(c)
    for c in range(k - 1, -1, -1):
        if not kids[c]:
            selected[c] = c != 0 or tree.root_is_cluster
            best[c] = tree.stability[c]
            continue
        below = sum(best[x] for x in kids[c])
        if c != 0 and tree.stability[c] > below:
            selected[c] = True
            best[c] = tree.stability[c]
            stack = list(kids[c])
            while stack:
                x = stack.pop()
                selected[x] = False
                stack.extend(kids[x])
        else:
            best[c] = below
    return selected


def extract_clusters(tree: CondensedTree) -> ClusterLabels:
    """Label points by their selected cluster; the rest are noise (-1).

    A point that fell out of a selected cluster, or out of any of its
    descendants, belongs to that cluster.
    """
    selected = select_clusters(tree)
    owner = np.full(tree.n_clusters, NOISE, dtype=np.int64)
    for c in range(tree.n_clusters):
        p = tree.parent[c]
        if selected[c]:
            owner[c] = c
        elif p >= 0:
            owner[c] = owner[p]
    raw = owner[tree.point_cluster]
    return ClusterLabels(renumber_by_size(raw))


def hdbscan_fit(data, params: HdbscanParams) -> tuple[ClusterLabels, CondensedTree]:
    X = _as_array(data)
    n = X.shape[0]
    if n < params.min_samples + 1:
        raise ValueError(f"need at least min_samples + 1 = {params.min_samples + 1} rows, got {n}")
    core = core_distances(X, params.min_samples, params.metric)
    mst = build_mst(core, X, params.metric)
    tree = build_condensed_tree(mst, params)
    return extract_clusters(tree), tree
