"""Density clustering of benign intrusion-detection traffic.

Clusters the benign class with HDBSCAN and Mean Shift, retrains a random
forest with benign sub-classes, and compares clusterings and per-class
Shapley attributions.
"""
from benignsplit.errors import ConfigError, DataError, SchemaError
from benignsplit.labels import ClusterLabels

__version__ = "0.1.0"

__all__ = ["ClusterLabels", "ConfigError", "DataError", "SchemaError", "__version__"]
