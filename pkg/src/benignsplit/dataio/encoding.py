from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from benignsplit.dataio.schema import DatasetSchema
from benignsplit.dataio.table import RawTable
from benignsplit.errors import DataError

LABEL_HEADER = "label"


@dataclass
class FeatureMatrix:
    values: np.ndarray
    feature_names: list[str]
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        if self.values.shape[1] != len(self.feature_names):
            raise DataError(
                f"{self.values.shape[1]} columns but {len(self.feature_names)} feature names")
        if not np.isfinite(self.values).all():
            raise DataError("feature matrix contains NaN or infinite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=object)
            if self.labels.shape != (self.values.shape[0],):
                raise DataError("labels length does not match row count")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows)
        labels = None if self.labels is None else self.labels[rows]
        return FeatureMatrix(self.values[rows], list(self.feature_names), labels)

    def with_labels(self, labels) -> "FeatureMatrix":
        return FeatureMatrix(self.values, list(self.feature_names), np.asarray(labels, dtype=object))

    def to_csv(self, path: str | Path) -> None:
        frame = pd.DataFrame(self.values, columns=self.feature_names)
        if self.labels is not None:
            frame[LABEL_HEADER] = self.labels
        frame.to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        frame = pd.read_csv(path, keep_default_na=False, dtype={LABEL_HEADER: str})
        labels = None
        if LABEL_HEADER in frame.columns:
            labels = frame.pop(LABEL_HEADER).astype(str).to_numpy(dtype=object)
        return cls(frame.to_numpy(dtype=np.float64), [str(c) for c in frame.columns], labels)


@dataclass
class EncoderSpec:
    """Everything learned from the training split."""

    vocabularies: dict[str, list[str]] = field(default_factory=dict)
    ranges: dict[str, tuple[float, float]] = field(default_factory=dict)
    feature_names: list[str] = field(default_factory=list)
    source_columns: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source_columns": self.source_columns,
            "vocabularies": self.vocabularies,
            "ranges": {k: [lo, hi] for k, (lo, hi) in self.ranges.items()},
            "feature_names": self.feature_names,
        }

    def transform(self, table: RawTable) -> FeatureMatrix:
        frame = table.frame
        missing = [c for c in self.source_columns if c not in frame.columns]
        if missing:
            raise DataError(f"table lacks encoded columns {missing}")
        blocks = []
        for col in self.source_columns:
            if col in self.vocabularies:
                vocab = self.vocabularies[col]
                raw = frame[col].astype(str).to_numpy()
                # unseen categories match no column and stay all-zero
                blocks.append((raw[:, None] == np.asarray(vocab, dtype=object)[None, :]).astype(np.float64))
            else:
                lo, hi = self.ranges[col]
                x = frame[col].to_numpy(dtype=np.float64)
                span = hi - lo
                scaled = (x - lo) / span if span > 0 else np.zeros_like(x)
                blocks.append(scaled[:, None])
        values = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
        label_col = table.schema.label_column
        labels = frame[label_col].to_numpy(dtype=object) if label_col in frame.columns else None
        return FeatureMatrix(values, list(self.feature_names), labels)


def fit_encoder(train: RawTable, schema: DatasetSchema | None = None) -> EncoderSpec:
    schema = schema or train.schema
    if len(train) == 0:
        raise DataError("empty training table")
    if schema.label_column not in train.frame.columns:
        raise DataError(f"label column {schema.label_column!r} missing")
    spec = EncoderSpec()
    for col in schema.feature_columns:
        if col not in train.frame.columns:
            continue
        spec.source_columns.append(col)
        if schema.kind_of(col) == "categorical":
            vocab = sorted(set(train.frame[col].astype(str)))
            spec.vocabularies[col] = vocab
            spec.feature_names.extend(f"{col}_{v}" for v in vocab)
        else:
            x = train.frame[col].to_numpy(dtype=np.float64)
            if not np.isfinite(x).all():
                raise DataError(f"non-finite values in {col!r}; clean the table first")
            spec.ranges[col] = (float(x.min()), float(x.max()))
            spec.feature_names.append(col)
    return spec


def fit_apply_encoding(train: RawTable, test: RawTable, schema: DatasetSchema | None = None
                       ) -> tuple[FeatureMatrix, FeatureMatrix, EncoderSpec]:
    """One-hot encode categoricals and min-max scale numerics, fit on ``train``.

    Test rows are transformed with the training vocabularies and ranges, so
    both matrices share ``feature_names``. Test values outside the training
    range are not clipped.
    """
    spec = fit_encoder(train, schema)
    if (schema or train.schema).label_column not in test.frame.columns:
        raise DataError("label column missing from test table")
    return spec.transform(train), spec.transform(test), spec
