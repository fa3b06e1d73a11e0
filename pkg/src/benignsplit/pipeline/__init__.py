"""Experiment configuration, stage orchestration and the command line."""
from benignsplit.pipeline.config import ExperimentConfig, config_from_dict, load_config
from benignsplit.pipeline.experiment import (
    Experiment, StageError, compare_methods, rejoin_benign, relabel_benign, run_experiment,
)

__all__ = [
    "Experiment", "ExperimentConfig", "StageError", "compare_methods", "config_from_dict",
    "load_config", "rejoin_benign", "relabel_benign", "run_experiment",
]
