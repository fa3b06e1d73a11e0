"""Gaussian-kernel Mean Shift.

Every point climbs the kernel density estimate independently (O(T n^2)
with no binning or seeding shortcuts), then converged positions are merged
greedily into modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from benignsplit.hdbscan import pairwise_block
from benignsplit.labels import ClusterLabels

_CHUNK_ELEMENTS = 4_000_000


class BandwidthError(ValueError):
    pass


@dataclass(frozen=True)
class MeanShiftParams:
    bandwidth: float | None = None
    quantile: float = 0.3
    sample_cap: int | None = 1000
    seed: int = 0
    max_iterations: int = 300
    tolerance: float | None = None
    merge_radius: float | None = None

    def __post_init__(self):
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0 < self.quantile <= 1:
            raise ValueError("quantile must lie in (0, 1]")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ModeSet:
    modes: np.ndarray
    assignment: np.ndarray
    bandwidth: float
    n_iterations: int
    n_underflow: int = 0

    def __len__(self):
        return self.modes.shape[0]

    def to_csv(self, feature_names=None) -> str:
        d = self.modes.shape[1]
        names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(d)]
        lines = [",".join(["mode", "size", *names])]
        sizes = np.bincount(self.assignment, minlength=len(self))
        for m in range(len(self)):
            coords = ",".join(repr(float(v)) for v in self.modes[m])
            lines.append(f"{m},{int(sizes[m])},{coords}")
        return "\n".join(lines) + "\n"


def _as_array(data) -> np.ndarray:
    arr = np.asarray(getattr(data, "values", data), dtype=np.float64)
    return arr[:, None] if arr.ndim == 1 else arr


def estimate_bandwidth(data, quantile: float = 0.3, sample_cap: int | None = 1000,
                       seed: int = 0) -> float:
    """Mean distance from (a seeded subsample of) points to their k-th
    nearest other point, with k = ceil(quantile * n) clipped to [1, n-1]."""
    X = _as_array(data)
    n = X.shape[0]
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    if n < 2:
        raise BandwidthError("need at least two points to estimate a bandwidth")
    k = min(max(1, math.ceil(quantile * n)), n - 1)
    if sample_cap is not None and sample_cap < n:
        rng = np.random.default_rng(seed)
        queries = np.sort(rng.choice(n, size=sample_cap, replace=False))
    else:
        queries = np.arange(n)
    total = 0.0
    step = max(1, _CHUNK_ELEMENTS // max(1, n * X.shape[1]))
    for lo in range(0, queries.size, step):
        q = queries[lo:lo + step]
        block = pairwise_block(X[q], X)
        total += float(np.partition(block, k, axis=1)[:, k].sum())
    bandwidth = total / queries.size
    if bandwidth <= 0:
        raise BandwidthError("estimated bandwidth is 0 (identical points); pass an explicit bandwidth")
    return bandwidth


def kde(x, data, h: float) -> np.ndarray:
    """Unnormalised Gaussian kernel density at each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d2 = pairwise_block(x, _as_array(data)) ** 2
    return np.exp(-d2 / (2.0 * h * h)).sum(axis=1)


def shift_point(x, data, h: float) -> tuple[np.ndarray, bool]:
    """One mean-shift step: the Gaussian-weighted mean of ``data`` around ``x``.

    Returns ``(m, underflow)``; when every weight underflows to zero the
    point is returned unchanged with ``underflow=True``.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    x = np.asarray(x, dtype=np.float64)
    X = _as_array(data)
    m, flags = _shift_many(x.reshape(1, -1), X, h)
    return m[0], bool(flags[0])


def _shift_many(Y: np.ndarray, X: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    d2 = pairwise_block(Y, X) ** 2
    w = np.exp(-d2 / (2.0 * h * h))
    total = w.sum(axis=1)
    dead = total == 0
    out = Y.copy()
    live = ~dead
    out[live] = (w[live] @ X) / total[live, None]
    return out, dead


def _iterate(X: np.ndarray, h: float, tol: float, max_iter: int):
    n, d = X.shape
    Y = X.copy()
    active = np.ones(n, dtype=bool)
    underflow = np.zeros(n, dtype=bool)
    step = max(1, _CHUNK_ELEMENTS // max(1, n * max(d, 1)))
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            it -= 1
            break
        for lo in range(0, idx.size, step):
            rows = idx[lo:lo + step]
            new, dead = _shift_many(Y[rows], X, h)
            moved = np.sqrt(((new - Y[rows]) ** 2).sum(axis=1))
            Y[rows] = new
            underflow[rows] |= dead
            active[rows] = (moved >= tol) & ~dead
    return Y, it, underflow


def merge_modes(positions: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Greedy single-pass merge of converged positions.

    Candidates are visited by descending basin size (how many converged
    positions lie within ``radius``), ties by index; a candidate becomes a
    mode unless it is within ``radius`` of an existing mode. Each position
    then joins its nearest mode.
    """
    uniq, inverse, counts = np.unique(positions, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    k = uniq.shape[0]
    basin = np.zeros(k, dtype=np.int64)
    step = max(1, _CHUNK_ELEMENTS // max(1, k))
    for lo in range(0, k, step):
        near = pairwise_block(uniq[lo:lo + step], uniq) < radius
        basin[lo:lo + step] = near @ counts
    first_seen = np.full(k, positions.shape[0], dtype=np.int64)
    np.minimum.at(first_seen, inverse, np.arange(positions.shape[0]))
    order = np.lexsort((first_seen, -basin))
    kept: list[int] = []
    for c in order:
        if kept and pairwise_block(uniq[c:c + 1], uniq[kept]).min() < radius:
            continue
        kept.append(int(c))
    modes = uniq[kept]
    nearest = np.empty(k, dtype=np.int64)
    for lo in range(0, k, step):
        nearest[lo:lo + step] = pairwise_block(uniq[lo:lo + step], modes).argmin(axis=1)
    return modes, nearest[inverse]


def mean_shift_fit(data, params: MeanShiftParams | None = None) -> tuple[ModeSet, ClusterLabels]:
    """Cluster every row by the density mode it climbs to.

    There is no noise label: isolated points end up as their own small
    modes. Modes are numbered by descending membership.
    """
    params = params or MeanShiftParams()
    X = _as_array(data)
    n = X.shape[0]
    if n < 1:
        raise ValueError("empty data")
    if params.bandwidth is not None:
        h = float(params.bandwidth)
    elif n == 1:
        raise BandwidthError("cannot estimate a bandwidth from one point; pass one explicitly")
    else:
        h = estimate_bandwidth(X, params.quantile, params.sample_cap, params.seed)
    tol = params.tolerance if params.tolerance is not None else 1e-4 * h
    radius = params.merge_radius if params.merge_radius is not None else h
    Y, n_iter, underflow = _iterate(X, h, tol, params.max_iterations)
    modes, assignment = merge_modes(Y, radius)

    sizes = np.bincount(assignment, minlength=modes.shape[0])
    first = np.full(modes.shape[0], n, dtype=np.int64)
    np.minimum.at(first, assignment, np.arange(n))
    order = np.lexsort((first, -sizes))
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    assignment = rank[assignment]
    mode_set = ModeSet(modes[order], assignment, h, n_iter, int(underflow.sum()))
    return mode_set, ClusterLabels(assignment)
