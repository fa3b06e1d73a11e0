from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from benignsplit.dataio.schema import DatasetSchema
from benignsplit.errors import DataError

_POS_INF = {"inf", "+inf", "infinity", "+infinity"}
_NEG_INF = {"-inf", "-infinity"}
_NAN = {"", "nan"}
_DASHES = re.compile("[–—�\x96]")


@dataclass
class RawTable:
    """Rows of one dataset split, typed per schema.

    Numeric and binary columns hold floats (missing markers become NaN or
    +/-inf so cleaning can find them); categorical, label and drop columns
    hold stripped strings.
    """

    frame: pd.DataFrame
    schema: DatasetSchema
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def labels(self) -> np.ndarray:
        return self.frame[self.schema.label_column].to_numpy(dtype=object)

    def records(self) -> list[dict]:
        return self.frame.to_dict(orient="records")

    def with_frame(self, frame: pd.DataFrame, schema: DatasetSchema | None = None,
                   log_entry: dict | None = None, **extra) -> "RawTable":
        prov = dict(self.provenance)
        prov["log"] = list(prov.get("log", []))
        if log_entry is not None:
            prov["log"].append(log_entry)
        prov.update(extra)
        prov["n_rows"] = len(frame)
        return RawTable(frame.reset_index(drop=True), schema or self.schema, prov)


def normalize_label(value: str) -> str:
    return " ".join(_DASHES.sub("-", str(value)).split())


def parse_numeric(values: pd.Series, column: str) -> pd.Series:
    """Convert strings to floats, mapping the recognised missing/infinite
    markers case-insensitively. Anything else unparsable is a DataError."""
    text = values.astype(str).str.strip()
    low = text.str.lower()
    out = pd.to_numeric(text.where(~low.isin(_NAN | _POS_INF | _NEG_INF)), errors="coerce")
    out[low.isin(_POS_INF)] = np.inf
    out[low.isin(_NEG_INF)] = -np.inf
    bad = out.isna() & ~low.isin(_NAN)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(f"non-numeric value {text.iloc[row]!r} in column {column!r}", row=row)
    return out.astype(np.float64)


def _read_text(path: Path, header: bool) -> pd.DataFrame:
    kwargs = dict(dtype=str, keep_default_na=False, header=0 if header else None)
    try:
        return pd.read_csv(path, encoding="utf-8", **kwargs)
    except UnicodeDecodeError:
        # CIC-IDS2017 CSVs ship cp1252 dashes in some label strings.
        return pd.read_csv(path, encoding="latin-1", **kwargs)


def type_frame(frame: pd.DataFrame, schema: DatasetSchema) -> pd.DataFrame:
    out = {}
    for col in schema.columns:
        series = frame[col.name]
        if col.kind in ("numeric", "binary"):
            out[col.name] = parse_numeric(series, col.name)
        elif col.kind == "label":
            out[col.name] = series.map(normalize_label)
        else:
            out[col.name] = series.astype(str).str.strip()
    return pd.DataFrame(out, columns=schema.names)


def check_labels(labels: pd.Series, schema: DatasetSchema) -> None:
    if not schema.attack_labels:
        return
    known = schema.known_labels
    unknown = ~labels.isin(known)
    if unknown.any():
        row = int(np.flatnonzero(unknown.to_numpy())[0])
        raise DataError(f"unknown label {labels.iloc[row]!r}", row=row)


def load_dataset(path: str | Path, schema: DatasetSchema) -> RawTable:
    """Read a delimited file into a RawTable typed by ``schema``.

    Header files are matched by column name (any order); header-less files
    are matched positionally.
    """
    path = Path(path)
    try:
        frame = _read_text(path, schema.has_header)
    except FileNotFoundError as exc:
        raise DataError(f"cannot read {path}: file not found") from exc
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc

    if frame.shape[1] != len(schema.columns):
        raise DataError(
            f"{path}: column-count mismatch, file has {frame.shape[1]} columns, "
            f"schema {schema.name!r} has {len(schema.columns)}"
        )
    if schema.has_header:
        frame.columns = [str(c).strip() for c in frame.columns]
        missing = [n for n in schema.names if n not in frame.columns]
        if missing:
            raise DataError(f"{path}: header lacks schema columns {missing}")
        frame = frame[schema.names]
    else:
        frame.columns = schema.names
    if frame.isna().any().any():
        row = int(np.flatnonzero(frame.isna().any(axis=1).to_numpy())[0])
        raise DataError(f"{path}: short row", row=row)

    typed = type_frame(frame, schema)
    check_labels(typed[schema.label_column], schema)
    return RawTable(typed, schema, {"source": str(path), "n_rows": len(typed), "log": []})


def concat_tables(tables: list[RawTable]) -> RawTable:
    """Stack several files of one dataset (e.g. the per-day CIC-IDS2017 CSVs)."""
    if not tables:
        raise DataError("no tables to concatenate")
    schema = tables[0].schema
    if any(t.schema != schema for t in tables):
        raise DataError("cannot concatenate tables with different schemas")
    frame = pd.concat([t.frame for t in tables], ignore_index=True)
    sources = [t.provenance.get("source") for t in tables]
    return RawTable(frame, schema, {"source": sources, "n_rows": len(frame), "log": []})
