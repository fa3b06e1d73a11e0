from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from benignsplit.errors import DataError


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    max_features: str | int | None = "sqrt"
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")

    def features_per_split(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if self.max_features == "log2":
            return max(1, int(math.log2(n_features))) if n_features > 1 else 1
        return max(1, min(n_features, int(self.max_features)))


@dataclass
class Tree:
    """Flat array layout: node 0 is the root; ``feature[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            r, nd = rows[inner], node[inner]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[inner] = np.where(go_left, self.left[nd], self.right[nd])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_records(self) -> list[dict]:
        out = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                out.append({"node": i, "leaf": True, "n_samples": int(self.n_samples[i]),
                            "value": [float(v) for v in self.value[i]]})
            else:
                out.append({"node": i, "leaf": False, "feature": int(self.feature[i]),
                            "threshold": float(self.threshold[i]), "left": int(self.left[i]),
                            "right": int(self.right[i]), "n_samples": int(self.n_samples[i])})
        return out

    @classmethod
    def from_records(cls, records: list[dict], n_classes: int) -> "Tree":
        n = len(records)
        tree = cls(
            feature=np.full(n, -1, dtype=np.int64), threshold=np.zeros(n),
            left=np.full(n, -1, dtype=np.int64), right=np.full(n, -1, dtype=np.int64),
            value=np.zeros((n, n_classes)), n_samples=np.zeros(n, dtype=np.int64),
        )
        for rec in records:
            i = rec["node"]
            tree.n_samples[i] = rec["n_samples"]
            if rec["leaf"]:
                tree.value[i] = rec["value"]
            else:
                tree.feature[i] = rec["feature"]
                tree.threshold[i] = rec["threshold"]
                tree.left[i] = rec["left"]
                tree.right[i] = rec["right"]
        return tree


def _gini_split(ys_onehot_cum: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Weighted child Gini impurity (times n) for every cut position."""
    left = ys_onehot_cum[:-1]
    right = total - left
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    g_left = n_left - (left * left).sum(axis=1) / n_left
    g_right = n_right - (right * right).sum(axis=1) / n_right
    return g_left + g_right


def _best_split(X, y, rows, features, n_classes, min_leaf):
    """Best (feature, threshold, cost) over ``features``, or None.

    Zero-gain splits are allowed, otherwise XOR-like data never splits.
    """
    n = rows.size
    best = None
    onehot = np.eye(n_classes)[y[rows]]
    total = onehot.sum(axis=0)
    for f in features:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cut_ok = xs[:-1] < xs[1:]
        if min_leaf > 1:
            pos = np.arange(1, n)
            cut_ok &= (pos >= min_leaf) & (n - pos >= min_leaf)
        if not cut_ok.any():
            continue
        cost = _gini_split(np.cumsum(onehot[order], axis=0), total)
        cost = np.where(cut_ok, cost, np.inf)
        i = int(np.argmin(cost))
        if best is None or cost[i] < best[2] - 1e-12:
            lo, hi = xs[i], xs[i + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (int(f), float(thr), float(cost[i]))
    return best


def fit_tree(X, y, n_classes: int, params: ForestParams, rng: np.random.Generator) -> Tree:
    """Grow one CART tree on integer class indices ``y`` (Gini criterion).

    At each node a random subset of features is searched; if none of them
    can split the node the remaining features are tried in random order.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("cannot fit a tree on empty data")
    if y.shape != (X.shape[0],):
        raise DataError("labels and rows differ in length")
    n_feat = X.shape[1]
    m_try = params.features_per_split(n_feat) if n_feat else 0
    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node(rows):
        counts = np.bincount(y[rows], minlength=n_classes).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        n_samples.append(rows.size)
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if (np.count_nonzero(value[node]) <= 1
                or (params.max_depth is not None and depth >= params.max_depth)
                or rows.size < 2 * params.min_leaf or n_feat == 0):
            continue
        perm = rng.permutation(n_feat)
        split = _best_split(X, y, rows, perm[:m_try], n_classes, params.min_leaf)
        if split is None:
            for f in perm[m_try:]:
                split = _best_split(X, y, rows, [f], n_classes, params.min_leaf)
                if split is not None:
                    break
        if split is None:
            continue
        f, thr, _ = split
        go_left = X[rows, f] <= thr
        l_rows, r_rows = rows[go_left], rows[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))

    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value).reshape(-1, n_classes), np.array(n_samples, dtype=np.int64))


@dataclass
class Forest:
    trees: list[Tree]
    classes: list[str]
    feature_names: list[str]
    params: ForestParams = field(default_factory=ForestParams)
    seed: int = 0

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _matrix(self, data) -> np.ndarray:
        names = getattr(data, "feature_names", None)
        if names is not None and list(names) != list(self.feature_names):
            raise DataError("feature names differ from those the forest was trained on")
        X = np.asarray(getattr(data, "values", data), dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def predict_proba(self, data) -> np.ndarray:
        X = self._matrix(data)
        total = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def to_json(self) -> str:
        return json.dumps({
            "classes": self.classes,
            "feature_names": self.feature_names,
            "params": asdict(self.params),
            "seed": self.seed,
            "trees": [t.to_records() for t in self.trees],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Forest":
        raw = json.loads(text)
        k = len(raw["classes"])
        return cls([Tree.from_records(t, k) for t in raw["trees"]], raw["classes"],
                   raw["feature_names"], ForestParams(**raw["params"]), raw["seed"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Forest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def fit_forest(data, labels=None, params: ForestParams | None = None, seed: int = 0,
               feature_names: list[str] | None = None) -> Forest:
    """Bagged Gini trees; every tree gets its own child seed of ``seed``."""
    params = params or ForestParams()
    X = np.asarray(getattr(data, "values", data), dtype=np.float64)
    if labels is None:
        labels = getattr(data, "labels", None)
    if labels is None:
        raise DataError("no labels given")
    labels = np.asarray(labels).astype(str)
    if labels.shape != (X.shape[0],):
        raise DataError("labels and rows differ in length")
    if X.shape[0] == 0:
        raise DataError("cannot fit a forest on empty data")
    names = feature_names or list(getattr(data, "feature_names", [f"x{i}" for i in range(X.shape[1])]))
    classes, y = np.unique(labels, return_inverse=True)
    n = X.shape[0]
    trees = []
    for child in np.random.SeedSequence(seed).spawn(params.n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        trees.append(fit_tree(X[rows], y[rows], classes.size, params, rng))
    return Forest(trees, [str(c) for c in classes], names, params, seed)


def predict(forest: Forest, data) -> tuple[np.ndarray, np.ndarray]:
    """Class labels and averaged leaf probabilities; argmax ties go to the
    lower class index."""
    proba = forest.predict_proba(data)
    idx = np.argmax(proba, axis=1)
    return np.asarray(forest.classes, dtype=object)[idx], proba
