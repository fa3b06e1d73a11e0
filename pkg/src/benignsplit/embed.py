"""Exact (O(n^2)) t-SNE for 2-D views of benign traffic.

No Barnes-Hut approximation: inputs are capped at ``MAX_ROWS`` rows and
callers are expected to subsample.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_ROWS = 20_000


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iterations: int = 250
    learning_rate: float | None = None
    seed: int = 0


@dataclass
class Embedding2D:
    coords: np.ndarray
    perplexity: float
    seed: int
    iterations: int
    kl_divergence: float
    kl_history: list[float] = field(default_factory=list, repr=False)

    def __len__(self):
        return self.coords.shape[0]

    def to_csv(self, path: str | Path, columns: dict[str, list] | None = None) -> None:
        """Write ``row_index, x, y`` plus any extra per-row label columns."""
        columns = columns or {}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_index", "x", "y", *columns])
            for i, (x, y) in enumerate(self.coords.tolist()):
                w.writerow([i, repr(x), repr(y), *(col[i] for col in columns.values())])


def squared_distances(X: np.ndarray) -> np.ndarray:
    out = np.zeros((X.shape[0], X.shape[0]))
    for col in X.T:
        diff = col[:, None] - col[None, :]
        out += diff * diff
    return out


def conditional_probabilities(D: np.ndarray, perplexity: float, tol: float = 1e-5,
                              max_steps: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Gaussian affinities whose entropy matches log(perplexity).

    Bisection on the precision beta of each row. Returns ``(P, achieved
    perplexity per row)``; the diagonal of P is zero.
    """
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    achieved = np.zeros(n)
    for i in range(n):
        d = np.delete(D[i], i)
        d = d - d.min()
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            w = np.exp(-d * beta)
            s = w.sum()
            H = np.log(s) + beta * (d * w).sum() / s
            diff = H - target
            if abs(diff) < tol:
                break
            if diff > 0:
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = (beta + lo) / 2
        row = w / s
        achieved[i] = np.exp(H)
        P[i, np.arange(n) != i] = row
    return P, achieved


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    P, _ = conditional_probabilities(squared_distances(X), perplexity)
    P = P + P.T
    return P / P.sum()


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-300)
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def tsne_embed(data, perplexity: float = 30.0, seed: int = 0, iterations: int = 1000,
               params: TsneParams | None = None) -> Embedding2D:
    """Embed rows in 2-D with exact t-SNE.

    Gradient descent with momentum 0.5 then 0.8, per-parameter gains, early
    exaggeration, and learning rate n/12 unless given. KL(P||Q) is
    recorded at every iteration.
    """
    params = params or TsneParams(perplexity=perplexity, seed=seed, iterations=iterations)
    X = np.asarray(getattr(data, "values", data), dtype=np.float64)
    n = X.shape[0]
    if n > MAX_ROWS:
        raise ValueError(f"{n} rows exceeds the exact t-SNE limit of {MAX_ROWS}; subsample first")
    if not 1 < params.perplexity < n / 3:
        raise ValueError(f"perplexity must lie in (1, n/3) = (1, {n / 3:.1f})")
    P = joint_probabilities(X, params.perplexity)
    P = np.maximum(P, 1e-12)
    np.fill_diagonal(P, 0.0)
    P = P / P.sum()

    rng = np.random.default_rng(params.seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    mask = P > 0
    p_log_p = float((P[mask] * np.log(P[mask])).sum())
    lr = params.learning_rate if params.learning_rate is not None else n / 12.0
    history: list[float] = []
    for it in range(params.iterations):
        exaggerate = it < params.exaggeration_iterations
        momentum = 0.5 if exaggerate else 0.8
        Pe = P * params.early_exaggeration if exaggerate else P
        num = 1.0 / (1.0 + squared_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-300)
        W = (Pe - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        velocity = momentum * velocity - lr * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        # diagonal P is 0, so the full-matrix sum equals the masked KL
        history.append(p_log_p - float((P * np.log(Q)).sum()))
    final = kl_divergence(P, Y)
    return Embedding2D(Y, params.perplexity, params.seed, params.iterations, final, history)
