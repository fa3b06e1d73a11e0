"""Classification reports, clustering agreement (ARI, AMI) and rank-biased
overlap."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln


@dataclass
class ClassificationReport:
    classes: list[str]
    confusion: np.ndarray
    accuracy: float
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    macro: dict[str, float]
    weighted: dict[str, float]
    zero_division: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self, digits: int | None = 3) -> dict:
        r = (lambda v: round(float(v), digits)) if digits is not None else float
        return {
            "accuracy": r(self.accuracy),
            "classes": list(self.classes),
            "confusion": self.confusion.astype(int).tolist(),
            "macro": {k: r(v) for k, v in sorted(self.macro.items())},
            "weighted": {k: r(v) for k, v in sorted(self.weighted.items())},
            "per_class": {
                c: {"precision": r(self.precision[c]), "recall": r(self.recall[c]),
                    "f1": r(self.f1[c]), "support": int(self.support[c])}
                for c in self.classes
            },
            "zero_division": sorted(self.zero_division),
        }


def _divide(num: float, den: float, tag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(tag)
        return 0.0
    return num / den


def classification_report(truth, predicted, classes=None) -> ClassificationReport:
    """Accuracy and per-class precision/recall/F1 with macro and
    support-weighted averages. Any 0/0 scores 0 and is listed in
    ``zero_division`` as ``"<metric>:<class>"``."""
    truth = np.asarray(truth).astype(str)
    predicted = np.asarray(predicted).astype(str)
    if truth.shape != predicted.shape:
        raise ValueError(f"length mismatch: {truth.size} truth vs {predicted.size} predicted")
    if truth.size == 0:
        raise ValueError("empty label lists")
    if classes is None:
        classes = sorted(set(truth.tolist()) | set(predicted.tolist()))
    classes = [str(c) for c in classes]
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    np.add.at(cm, (np.array([index[t] for t in truth]), np.array([index[p] for p in predicted])), 1)

    flags: list[str] = []
    precision, recall, f1, support = {}, {}, {}, {}
    for i, c in enumerate(classes):
        tp = cm[i, i]
        precision[c] = _divide(tp, cm[:, i].sum(), f"precision:{c}", flags)
        recall[c] = _divide(tp, cm[i, :].sum(), f"recall:{c}", flags)
        f1[c] = _divide(2 * precision[c] * recall[c], precision[c] + recall[c], f"f1:{c}", flags)
        support[c] = int(cm[i, :].sum())
    n = truth.size
    present = [c for c in classes if support[c] > 0]
    macro = {m: float(np.mean([d[c] for c in present])) if present else 0.0
             for m, d in (("precision", precision), ("recall", recall), ("f1", f1))}
    weighted = {m: float(sum(d[c] * support[c] for c in classes) / n)
                for m, d in (("precision", precision), ("recall", recall), ("f1", f1))}
    return ClassificationReport(classes, cm, float(np.trace(cm) / n), precision, recall, f1,
                                support, macro, weighted, flags)


def contingency(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max(initial=-1) + 1, ib.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ia.reshape(-1), ib.reshape(-1)), 1)
    return table


def _labels(x):
    return getattr(x, "labels", x)


def _pairs(counts) -> int:
    return sum(int(c) * (int(c) - 1) // 2 for c in np.asarray(counts).ravel())


def adjusted_rand(a, b) -> float:
    """Pair-counting adjusted Rand index, computed in exact integer
    arithmetic. Noise (-1) counts as a category."""
    table = contingency(_labels(a), _labels(b))
    n = int(table.sum())
    if n < 2:
        raise ValueError("adjusted Rand needs at least two items")
    index = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    # (index - E) / (max - E) with E = rows*cols/total, max = (rows+cols)/2
    num = 2 * (index * total - rows * cols)
    den = (rows + cols) * total - 2 * rows * cols
    if den == 0:
        # both partitions all-singletons or both one cluster: identical
        return 1.0
    return float(Fraction(num, den))


def _entropy(counts: np.ndarray) -> float:
    counts = counts[counts > 0].astype(np.float64)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def mutual_info(table: np.ndarray) -> float:
    n = table.sum()
    nz = table > 0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    return float((table[nz] / n * np.log(table[nz] * n / outer[nz])).sum())


def expected_mutual_info(table: np.ndarray) -> float:
    """E[MI] under the hypergeometric (permutation) model, natural logs."""
    a = table.sum(axis=1).astype(np.int64)
    b = table.sum(axis=0).astype(np.int64)
    n = int(table.sum())
    lg = gammaln(np.arange(n + 2, dtype=np.float64))  # lg[k] = log((k-1)!)
    total = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if hi < lo:
                continue
            nij = np.arange(lo, hi + 1)
            term = nij / n * (np.log(n * nij) - math.log(ai * bj))
            logp = (lg[ai + 1] + lg[bj + 1] + lg[n - ai + 1] + lg[n - bj + 1]
                    - lg[n + 1] - lg[nij + 1] - lg[ai - nij + 1] - lg[bj - nij + 1]
                    - lg[n - ai - bj + nij + 1])
            total += float((term * np.exp(logp)).sum())
    return total


def adjusted_mutual_info(a, b) -> float:
    """AMI with arithmetic-mean entropy normalisation. Two single-cluster
    partitions are identical and score 1."""
    table = contingency(_labels(a), _labels(b))
    if table.sum() == 0:
        raise ValueError("empty label lists")
    if table.shape[0] == table.shape[1] == 1:
        return 1.0
    if table.shape[0] == table.shape[1] == table.sum():
        return 1.0
    mi = mutual_info(table)
    emi = expected_mutual_info(table)
    h_mean = (_entropy(table.sum(axis=1)) + _entropy(table.sum(axis=0))) / 2.0
    denom = h_mean - emi
    if abs(denom) < np.finfo(float).eps:
        denom = np.finfo(float).eps if denom >= 0 else -np.finfo(float).eps
    return float((mi - emi) / denom)


@dataclass(frozen=True)
class AgreementScores:
    ars: float
    ami: float

    def to_dict(self, digits: int = 3) -> dict:
        return {"ami": round(self.ami, digits), "ars": round(self.ars, digits)}


def agreement(a, b) -> AgreementScores:
    return AgreementScores(adjusted_rand(a, b), adjusted_mutual_info(a, b))


@dataclass(frozen=True)
class RboResult:
    rbo_min: float
    rbo_ext: float
    p: float
    depth: int
    top_weight: float

    def to_dict(self, digits: int = 3) -> dict:
        return {"depth": self.depth, "p": self.p, "rbo_ext": round(self.rbo_ext, digits),
                "rbo_min": round(self.rbo_min, digits), "top_weight": round(self.top_weight, digits)}


def rbo_top_weight(p: float, depth: int) -> float:
    """Share of the total RBO weight carried by the first ``depth`` ranks."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    tail = sum(p ** i / i for i in range(1, depth))
    return 1 - p ** (depth - 1) + (1 - p) / p * depth * (math.log(1 / (1 - p)) - tail)


def rbo(list_a, list_b, p: float = 0.95) -> RboResult:
    """Rank-biased overlap evaluated to depth min(len(a), len(b)).

    ``rbo_min`` assumes no agreement beyond the evaluated prefix;
    ``rbo_ext`` assumes the final prefix agreement continues forever.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    a, b = list(list_a), list(list_b)
    if not a or not b:
        raise ValueError("rankings must be non-empty")
    for name, lst in (("first", a), ("second", b)):
        if len(set(lst)) != len(lst):
            raise ValueError(f"{name} ranking contains duplicates")
    k = min(len(a), len(b))
    seen_a, seen_b = set(), set()
    overlap = 0
    x = np.zeros(k + 1)
    for d in range(1, k + 1):
        ea, eb = a[d - 1], b[d - 1]
        if ea == eb:
            overlap += 1
        else:
            overlap += (ea in seen_b) + (eb in seen_a)
        seen_a.add(ea)
        seen_b.add(eb)
        x[d] = overlap
    d = np.arange(1, k + 1)
    pd_ = p ** d
    xk = x[k]
    rbo_min = (1 - p) / p * (((x[1:] - xk) * pd_ / d).sum() - xk * math.log(1 - p))
    rbo_ext = (1 - p) / p * (x[1:] / d * pd_).sum() + xk / k * p ** k
    return RboResult(float(rbo_min), float(rbo_ext), p, k, rbo_top_weight(p, k))
