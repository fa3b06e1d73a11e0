from __future__ import annotations

import numpy as np
import pandas as pd

from benignsplit.dataio.table import RawTable
from benignsplit.errors import DataError, SchemaError

NONNEGATIVE_COLUMNS = (
    "Flow Duration", "Flow Bytes/s", "Flow IAT Mean", "Fwd Header Length",
    "Bwd Header Length",
)
IRRELEVANT_COLUMNS = ("Destination Port",)
HIGH_VARIANCE_COLUMNS = ("Idle Mean", "Idle Std", "Idle Max", "Idle Min")
LEAKY_COLUMNS = ("Init_Win_bytes_forward",)


def _require(table: RawTable, names) -> None:
    missing = [n for n in names if n not in table.schema.names]
    if missing:
        raise SchemaError(f"columns absent from schema {table.schema.name!r}: {missing}")


def drop_duplicates(table: RawTable) -> RawTable:
    frame = table.frame
    keep = ~frame.duplicated(keep="first")
    return table.with_frame(frame[keep], log_entry={
        "rule": "duplicate_rows", "rows_removed": int((~keep).sum())})


def drop_nonfinite(table: RawTable) -> RawTable:
    numeric = table.schema.columns_of("numeric", "binary")
    values = table.frame[numeric].to_numpy(dtype=np.float64)
    text_cols = table.schema.columns_of("categorical", "label")
    blank = (table.frame[text_cols] == "").any(axis=1).to_numpy() if text_cols else False
    keep = np.isfinite(values).all(axis=1) & ~blank
    return table.with_frame(table.frame[keep], log_entry={
        "rule": "missing_or_infinite", "rows_removed": int((~keep).sum())})


def drop_negative(table: RawTable, columns=NONNEGATIVE_COLUMNS) -> RawTable:
    _require(table, columns)
    present = [c for c in columns if c in table.frame.columns]
    keep = ~(table.frame[present] < 0).any(axis=1)
    return table.with_frame(table.frame[keep], log_entry={
        "rule": "negative_values", "columns": list(present),
        "rows_removed": int((~keep).sum())})


def drop_constant_zero(table: RawTable) -> RawTable:
    numeric = table.schema.columns_of("numeric", "binary")
    zero = [c for c in numeric if (table.frame[c] == 0).all()]
    return drop_columns(table, zero, rule="all_zero_columns")


def drop_columns(table: RawTable, columns, rule: str) -> RawTable:
    columns = list(columns)
    _require(table, columns)
    frame = table.frame.drop(columns=columns)
    return table.with_frame(frame, schema=table.schema.without(columns), log_entry={
        "rule": rule, "columns_removed": columns, "rows_removed": 0})


def clean_cicids(table: RawTable) -> RawTable:
    """Apply the CIC-IDS2017 cleaning rules in order; each rule logs its
    removal count in ``provenance["log"]``."""
    _require(table, NONNEGATIVE_COLUMNS + IRRELEVANT_COLUMNS + HIGH_VARIANCE_COLUMNS
             + LEAKY_COLUMNS)
    table = drop_duplicates(table)
    table = drop_nonfinite(table)
    table = drop_negative(table)
    table = drop_constant_zero(table)
    # a listed column may already be gone as all-zero
    for cols, rule in ((IRRELEVANT_COLUMNS, "irrelevant_columns"),
                       (HIGH_VARIANCE_COLUMNS, "high_variance_columns"),
                       (LEAKY_COLUMNS, "label_leaking_columns")):
        table = drop_columns(table, [c for c in cols if c in table.schema.names], rule=rule)
    return table


def clamp_binary(table: RawTable, column: str) -> RawTable:
    """Set every value above 1 to 1 in a binary column (UNSW-NB15's
    ``is_ftp_login`` carries counts up to 4)."""
    if table.schema.kind_of(column) != "binary":
        raise SchemaError(f"column {column!r} is not declared binary")
    values = table.frame[column]
    if not pd.api.types.is_numeric_dtype(values):
        raise DataError(f"non-numeric values in binary column {column!r}")
    over = values > 1
    frame = table.frame.copy()
    frame.loc[over, column] = 1.0
    return table.with_frame(frame, log_entry={
        "rule": "clamp_binary", "column": column, "values_clamped": int(over.sum()),
        "rows_removed": 0})


def removal_summary(table: RawTable) -> dict:
    log = table.provenance.get("log", [])
    return {
        "rows_removed": sum(e.get("rows_removed", 0) for e in log),
        "columns_removed": [c for e in log for c in e.get("columns_removed", [])],
        "rules": log,
    }
