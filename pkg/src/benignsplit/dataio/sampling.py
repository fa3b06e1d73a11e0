from __future__ import annotations

import numpy as np

from benignsplit.dataio.table import RawTable
from benignsplit.errors import DataError


def class_counts(table: RawTable) -> dict[str, int]:
    values, counts = np.unique(table.labels.astype(str), return_counts=True)
    return {str(v): int(c) for v, c in zip(values, counts)}


def stratified_sample(table: RawTable, per_class_targets: dict[str, int], seed: int) -> RawTable:
    """Sample ``per_class_targets[c]`` rows of each class without replacement.

    Classes missing from ``per_class_targets`` are kept whole. Selected rows
    keep their original relative order, so full-size targets are an identity.
    """
    labels = table.labels.astype(str)
    counts = class_counts(table)
    unknown = sorted(set(per_class_targets) - set(counts))
    if unknown:
        raise DataError(f"sampling targets name absent classes {unknown}")
    rng = np.random.default_rng(seed)
    keep = np.zeros(len(labels), dtype=bool)
    for cls in sorted(counts):
        rows = np.flatnonzero(labels == cls)
        target = per_class_targets.get(cls, rows.size)
        if target > rows.size:
            raise DataError(f"target {target} for class {cls!r} exceeds population {rows.size}")
        if target < 0:
            raise DataError(f"negative sampling target for class {cls!r}")
        keep[rng.choice(rows, size=int(target), replace=False)] = True
    return table.with_frame(
        table.frame[keep],
        log_entry={"rule": "stratified_sample", "seed": int(seed),
                   "targets": {k: int(v) for k, v in sorted(per_class_targets.items())},
                   "rows_removed": int((~keep).sum())},
        sample_seed=int(seed),
    )


def proportional_targets(table: RawTable, total: int, fixed: dict[str, int] | None = None
                         ) -> dict[str, int]:
    """Split ``total`` rows across classes: ``fixed`` classes get their stated
    counts and the remainder is shared in proportion to class size (largest
    remainder rounding, ties by class name)."""
    fixed = dict(fixed or {})
    counts = class_counts(table)
    rest = {c: n for c, n in counts.items() if c not in fixed}
    budget = total - sum(fixed.values())
    pool = sum(rest.values())
    if budget < 0 or budget > pool:
        raise DataError(f"cannot allocate {budget} rows across {pool} available")
    exact = {c: budget * n / pool for c, n in rest.items()} if pool else {}
    targets = {c: int(np.floor(v)) for c, v in exact.items()}
    short = budget - sum(targets.values())
    order = sorted(exact, key=lambda c: (-(exact[c] - targets[c]), c))
    for c in order[:short]:
        targets[c] += 1
    targets.update(fixed)
    return targets


def split_table(table: RawTable, test_fraction: float, seed: int) -> tuple[RawTable, RawTable]:
    """Stratified train/test split for datasets without a published split."""
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must lie in (0, 1)")
    labels = table.labels.astype(str)
    rng = np.random.default_rng(seed)
    is_test = np.zeros(len(labels), dtype=bool)
    for cls in sorted(set(labels)):
        rows = np.flatnonzero(labels == cls)
        n_test = int(round(rows.size * test_fraction))
        is_test[rng.choice(rows, size=n_test, replace=False)] = True
    entry = {"rule": "train_test_split", "seed": int(seed), "test_fraction": test_fraction}
    return (table.with_frame(table.frame[~is_test], log_entry=entry),
            table.with_frame(table.frame[is_test], log_entry=entry))
