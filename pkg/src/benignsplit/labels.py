from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NOISE = -1


@dataclass(frozen=True)
class ClusterLabels:
    """Per-row cluster assignment; ``NOISE`` (-1) marks unclustered rows."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)
        if arr.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if arr.size and arr.min() < NOISE:
            raise ValueError("labels below the noise sentinel")

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def n_clusters(self) -> int:
        return int(np.unique(self.labels[self.labels != NOISE]).size)

    @property
    def n_noise(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def sizes(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row_index", "label"])
            for i, lab in enumerate(self.labels.tolist()):
                writer.writerow([i, lab])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ClusterLabels":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        idx = [int(r["row_index"]) for r in rows]
        if idx != list(range(len(idx))):
            raise ValueError(f"{path}: row_index column is not 0..n-1")
        return cls(np.array([int(r["label"]) for r in rows], dtype=np.int64))


def renumber_by_size(raw: np.ndarray) -> np.ndarray:
    """Relabel clusters 0..k-1 by decreasing size; ties go to the cluster
    whose first member has the lowest row index. Noise stays -1."""
    raw = np.asarray(raw)
    out = np.full(raw.shape, NOISE, dtype=np.int64)
    ids = [c for c in np.unique(raw) if c != NOISE]
    keyed = []
    for c in ids:
        members = np.flatnonzero(raw == c)
        keyed.append((-members.size, int(members[0]), c))
    for new, (_, _, c) in enumerate(sorted(keyed)):
        out[raw == c] = new
    return out
