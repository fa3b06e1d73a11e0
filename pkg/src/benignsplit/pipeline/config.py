"""Experiment configuration (YAML).

Example::

    dataset:
      schema: UNSW-NB15            # built-in name or path to a schema YAML
      train: data/UNSW_NB15_training-set.csv
      test: data/UNSW_NB15_testing-set.csv
      clamp_binary: [is_ftp_login]
    seed: 0
    methods: [hdbscan, meanshift]
    modes: [base, clustered, rejoined]
    hdbscan: {min_samples: 500, min_cluster_size: 10000}
    output: runs/unsw

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from benignsplit.dataio.schema import DatasetSchema, get_schema
from benignsplit.errors import ConfigError
from benignsplit.forest import ForestParams
from benignsplit.hdbscan import HdbscanParams
from benignsplit.meanshift import MeanShiftParams

METHODS = ("hdbscan", "meanshift")
MODES = ("base", "clustered", "rejoined")


@dataclass(frozen=True)
class DatasetConfig:
    schema: str
    train: tuple[str, ...]
    test: tuple[str, ...] = ()
    test_fraction: float = 0.3
    clean: str = "none"
    clamp_binary: tuple[str, ...] = ()
    sample_targets: dict = field(default_factory=dict)
    sample_total: int | None = None


@dataclass(frozen=True)
class ExplainConfig:
    background: int = 100
    instances_per_class: int = 20
    rbo_p: float = 0.95


@dataclass(frozen=True)
class EmbedConfig:
    max_rows: int = 10_000
    perplexity: float = 30.0
    iterations: int = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig
    output: str
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    modes: tuple[str, ...] = MODES
    hdbscan: HdbscanParams = field(default_factory=HdbscanParams)
    meanshift: MeanShiftParams = field(default_factory=MeanShiftParams)
    forest: ForestParams = field(default_factory=ForestParams)
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    embed: EmbedConfig = field(default_factory=EmbedConfig)

    def __post_init__(self):
        if not self.modes:
            raise ConfigError("at least one evaluation mode is required")
        if not self.methods:
            raise ConfigError("at least one clustering method is required")
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ConfigError(f"unknown modes {bad}; choose from {MODES}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")

    @property
    def schema(self) -> DatasetSchema:
        return get_schema(self.dataset.schema)

    def echo(self) -> dict:
        """Plain-data form of the config, stable across runs."""
        return json.loads(json.dumps(asdict(self), sort_keys=True, default=list))

    def fingerprint(self, *sections: str) -> str:
        data = self.echo()
        if sections:
            data = {k: data[k] for k in sections}
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, seed=None, output=None, methods=None, modes=None) -> "ExperimentConfig":
        kw = {}
        if seed is not None:
            kw["seed"] = int(seed)
        if output is not None:
            kw["output"] = str(output)
        if methods is not None:
            kw["methods"] = tuple(methods)
        if modes is not None:
            kw["modes"] = tuple(modes)
        return replace(self, **kw)


def _section(cls, raw, name):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name!r} section: {exc}") from exc


def _paths(value, base: Path) -> tuple[str, ...]:
    if value is None:
        return ()
    items = value if isinstance(value, list) else [value]
    return tuple(str((base / str(p)).resolve()) if not Path(str(p)).is_absolute() else str(p)
                 for p in items)


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    base = Path(base_dir)
    known = {"dataset", "output", "seed", "methods", "modes", "hdbscan", "meanshift",
             "forest", "explain", "embed"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {unknown}")
    ds = dict(raw.get("dataset") or {})
    if "schema" not in ds or "train" not in ds:
        raise ConfigError("dataset needs 'schema' and 'train'")
    schema = str(ds.pop("schema"))
    if not any(schema.lower() in (n.lower(), n.lower().replace("-", ""))
               for n in ("NSL-KDD", "UNSW-NB15", "CIC-IDS2017")):
        schema = str((base / schema).resolve()) if not Path(schema).is_absolute() else schema
    sample = ds.pop("sample", None) or {}
    dataset = _section(DatasetConfig, {
        **ds,
        "schema": schema,
        "train": _paths(ds.get("train"), base),
        "test": _paths(ds.get("test"), base),
        "clamp_binary": tuple(ds.get("clamp_binary") or ()),
        "sample_targets": dict(sample.get("targets") or {}),
        "sample_total": sample.get("total"),
    }, "dataset")
    output = raw.get("output", "out")
    output = str(base / output) if not Path(str(output)).is_absolute() else str(output)
    try:
        return ExperimentConfig(
            dataset=dataset,
            output=output,
            seed=int(raw.get("seed", 0)),
            methods=tuple(raw["methods"] if raw.get("methods") is not None else METHODS),
            modes=tuple(raw["modes"] if raw.get("modes") is not None else MODES),
            hdbscan=_section(HdbscanParams, raw.get("hdbscan"), "hdbscan"),
            meanshift=_section(MeanShiftParams, raw.get("meanshift"), "meanshift"),
            forest=_section(ForestParams, raw.get("forest"), "forest"),
            explain=_section(ExplainConfig, raw.get("explain"), "explain"),
            embed=_section(EmbedConfig, raw.get("embed"), "embed"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return config_from_dict(raw, path.parent)
