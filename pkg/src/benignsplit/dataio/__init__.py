"""Dataset ingestion, cleaning, encoding and sampling."""
from benignsplit.dataio.cleaning import clamp_binary, clean_cicids, removal_summary
from benignsplit.dataio.encoding import EncoderSpec, FeatureMatrix, fit_apply_encoding, fit_encoder
from benignsplit.dataio.sampling import proportional_targets, split_table, stratified_sample
from benignsplit.dataio.schema import (
    BUILTIN_SCHEMAS, CICIDS2017, NSL_KDD, UNSW_NB15, Column, DatasetSchema, get_schema,
    load_schema, schema_from_dict,
)
from benignsplit.dataio.table import RawTable, concat_tables, load_dataset

__all__ = [
    "BUILTIN_SCHEMAS", "CICIDS2017", "Column", "DatasetSchema", "EncoderSpec",
    "FeatureMatrix", "NSL_KDD", "RawTable", "UNSW_NB15", "clamp_binary", "clean_cicids",
    "concat_tables", "fit_apply_encoding", "fit_encoder", "get_schema", "load_dataset",
    "load_schema", "proportional_targets", "removal_summary", "schema_from_dict",
    "split_table", "stratified_sample",
]
