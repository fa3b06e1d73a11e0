"""Shapley attributions of class-probability outputs.

Both routes use interventional conditioning on an explicit background set:
the value of a coalition S is the model's mean output over background rows
whose S-features are overwritten with the explained instance's values.

``exact_shapley`` enumerates all 2^M coalitions of a black-box model.
``tree_shap`` gets the same numbers from the tree structure in polynomial
time: for one background row, the leaves reachable by hybrid inputs are
characterised by a set A of features that must come from the instance and a
set B that must come from the background row, and the Shapley value of such
an indicator game has a closed form in |A| and |B|.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from benignsplit.errors import DataError
from benignsplit.forest import Forest, Tree

MAX_EXACT_FEATURES = 15


@dataclass
class ShapMatrix:
    """``values[instance, feature, class]`` plus per-class ``base`` values.

    For every instance and class, ``base + values.sum(axis=1)`` equals the
    model output.
    """

    values: np.ndarray
    base: np.ndarray
    feature_names: list[str]
    classes: list[str]

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    def output(self) -> np.ndarray:
        return self.base[None, :] + self.values.sum(axis=1)

    def to_csv(self, instance_ids=None) -> str:
        ids = list(range(self.n_instances)) if instance_ids is None else list(instance_ids)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", "class", "feature", "phi"])
        for i, inst in enumerate(ids):
            for c, cls in enumerate(self.classes):
                for f, name in enumerate(self.feature_names):
                    w.writerow([inst, cls, name, repr(float(self.values[i, f, c]))])
        return buf.getvalue()


@dataclass(frozen=True)
class FeatureRanking:
    klass: str
    features: list[str]
    scores: list[float]

    def to_csv(self) -> str:
        lines = ["rank,feature,mean_abs_phi"]
        lines += [f"{r},{f},{s!r}" for r, (f, s) in enumerate(zip(self.features, self.scores), 1)]
        return "\n".join(lines) + "\n"


def _background(background) -> np.ndarray:
    B = np.asarray(getattr(background, "values", background), dtype=np.float64)
    if B.ndim == 1:
        B = B[None, :]
    if B.shape[0] == 0:
        raise DataError("background set is empty")
    return B


def exact_shapley(model, instance, background, n_features: int | None = None) -> np.ndarray:
    """Shapley values by full coalition enumeration.

    ``model`` maps an (n, M) matrix to (n, K) outputs. Returns an (M, K)
    array. Cost is 2^M model evaluations on the background set, so M is
    capped at 15.
    """
    x = np.asarray(instance, dtype=np.float64).reshape(-1)
    B = _background(background)
    M = x.size if n_features is None else n_features
    if M != x.size or B.shape[1] != M:
        raise DataError("instance, background and feature count disagree")
    if M > MAX_EXACT_FEATURES:
        raise ValueError(f"exact enumeration is limited to {MAX_EXACT_FEATURES} features, got {M}")
    n_bg = B.shape[0]
    masks = np.arange(2 ** M)
    bits = ((masks[:, None] >> np.arange(M)[None, :]) & 1).astype(bool)
    hybrid = np.where(bits[:, None, :], x[None, None, :], B[None, :, :])
    out = np.asarray(model(hybrid.reshape(-1, M)), dtype=np.float64)
    if out.ndim == 1:
        out = out[:, None]
    value = out.reshape(2 ** M, n_bg, -1).mean(axis=1)

    fact = [math.factorial(i) for i in range(M + 1)]
    size = bits.sum(axis=1)
    phi = np.zeros((M, value.shape[1]))
    for j in range(M):
        without = masks[~bits[:, j]]
        s = size[without]
        weight = np.array([fact[k] * fact[M - k - 1] for k in s], dtype=np.float64) / fact[M]
        phi[j] = weight @ (value[without | (1 << j)] - value[without])
    return phi


def _tree_shap_one(tree: Tree, x: np.ndarray, B: np.ndarray, phi: np.ndarray,
                   weights: dict) -> None:
    """Accumulate (sum over background rows) attributions of one tree into
    ``phi`` (M x K)."""
    feat, thr, left, right, value = tree.feature, tree.threshold, tree.left, tree.right, tree.value

    def coef(a: int, b: int):
        key = (a, b)
        if key not in weights:
            d = math.factorial(a + b)
            weights[key] = (
                math.factorial(a - 1) * math.factorial(b) / d if a else 0.0,
                math.factorial(a) * math.factorial(b - 1) / d if b else 0.0,
            )
        return weights[key]

    stack = [(0, frozenset(), frozenset(), np.arange(B.shape[0]))]
    while stack:
        node, A, Bset, rows = stack.pop()
        f = feat[node]
        if f < 0:
            if A or Bset:
                w_in, w_out = coef(len(A), len(Bset))
                contrib = value[node] * rows.size
                for j in A:
                    phi[j] += w_in * contrib
                for j in Bset:
                    phi[j] -= w_out * contrib
            continue
        x_left = x[f] <= thr[node]
        x_child, other = (left[node], right[node]) if x_left else (right[node], left[node])
        z_left = B[rows, f] <= thr[node]
        same = rows[z_left == x_left]
        diff = rows[z_left != x_left]
        if f in A:
            stack.append((x_child, A, Bset, rows))
            continue
        if f in Bset:
            if same.size:
                stack.append((x_child, A, Bset, same))
            if diff.size:
                stack.append((other, A, Bset, diff))
            continue
        if same.size:
            stack.append((x_child, A, Bset, same))
        if diff.size:
            stack.append((x_child, A | {f}, Bset, diff))
            stack.append((other, A, Bset | {f}, diff))


def tree_shap(forest: Forest, instances, background) -> ShapMatrix:
    """Interventional Tree SHAP for every row of ``instances``.

    Matches :func:`exact_shapley` on ``forest.predict_proba`` with the same
    background up to floating-point rounding, at a cost linear in the
    number of reachable leaves instead of 2^M.
    """
    names = getattr(instances, "feature_names", None)
    if names is not None and list(names) != list(forest.feature_names):
        raise DataError("instance features differ from the forest's")
    X = np.asarray(getattr(instances, "values", instances), dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    B = _background(background)
    M, K = forest.n_features, len(forest.classes)
    if X.shape[1] != M or B.shape[1] != M:
        raise DataError(f"expected {M} features")
    weights: dict = {}
    values = np.zeros((X.shape[0], M, K))
    for i in range(X.shape[0]):
        phi = np.zeros((M, K))
        for tree in forest.trees:
            _tree_shap_one(tree, X[i], B, phi, weights)
        values[i] = phi / (B.shape[0] * len(forest.trees))
    base = forest.predict_proba(B).mean(axis=0)
    return ShapMatrix(values, base, list(forest.feature_names), list(forest.classes))


def shap_summary(shap: ShapMatrix, klass: str, rows=None) -> FeatureRanking:
    """Rank features by mean |phi| for one class output (ties by feature
    index). ``rows`` restricts the average to a subset of instances."""
    if klass not in shap.classes:
        raise KeyError(f"unknown class {klass!r}")
    c = shap.classes.index(klass)
    vals = shap.values[:, :, c] if rows is None else shap.values[np.asarray(rows)][:, :, c]
    if vals.shape[0] == 0:
        raise DataError(f"no instances to summarise for class {klass!r}")
    score = np.abs(vals).mean(axis=0)
    order = sorted(range(score.size), key=lambda j: (-score[j], j))
    return FeatureRanking(klass, [shap.feature_names[j] for j in order],
                          [float(score[j]) for j in order])


def sample_background(data, labels, size: int, seed: int) -> np.ndarray:
    """Row indices of a class-stratified background sample (proportional
    allocation, at least one row per class when ``size`` allows)."""
    labels = np.asarray(labels).astype(str)
    n = labels.size
    if size >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(labels, return_counts=True)
    quota = np.floor(counts * size / n).astype(int)
    quota = np.maximum(quota, np.minimum(1, counts)) if size >= classes.size else quota
    while quota.sum() > size:
        quota[np.argmax(quota)] -= 1
    remainder = counts * size / n - quota
    for c in np.argsort(-remainder, kind="stable"):
        if quota.sum() >= size:
            break
        if quota[c] < counts[c]:
            quota[c] += 1
    picked = [rng.choice(np.flatnonzero(labels == cls), size=q, replace=False)
              for cls, q in zip(classes, quota) if q]
    return np.sort(np.concatenate(picked)) if picked else np.arange(0)

