"""Stages of the benign-heterogeneity experiment.

Each stage writes its artifacts under the output directory together with a
fingerprint of the config sections it depends on; later stages reuse those
artifacts when the fingerprint still matches and recompute them otherwise.
The global ``seed`` drives every random choice (sampling, bandwidth
subsample, bootstrap, SHAP background, t-SNE init).
"""
from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from benignsplit.dataio import (
    FeatureMatrix, clamp_binary, clean_cicids, concat_tables, fit_apply_encoding, load_dataset,
    proportional_targets, removal_summary, split_table, stratified_sample,
)
from benignsplit.dataio.sampling import class_counts
from benignsplit.errors import BenignSplitError, ConfigError
from benignsplit.embed import TsneParams, tsne_embed
from benignsplit.explain import sample_background, shap_summary, tree_shap
from benignsplit.forest import Forest, fit_forest, predict
from benignsplit.hdbscan import hdbscan_fit
from benignsplit.labels import NOISE, ClusterLabels
from benignsplit.meanshift import mean_shift_fit
from benignsplit.metrics import agreement, classification_report, rbo
from benignsplit.pipeline.config import ExperimentConfig

log = logging.getLogger(__name__)

SUBCLASS_PREFIX = "normal-"
NOISE_CLASS = "normal-noise"
DIGITS = 3


class StageError(BenignSplitError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def relabel_benign(labels, clusters: ClusterLabels | np.ndarray, benign_label: str) -> np.ndarray:
    """Replace benign labels with ``normal-<cluster>`` (``normal-noise`` for
    HDBSCAN noise). ``clusters`` covers exactly the benign rows, in order."""
    labels = np.asarray(labels, dtype=object)
    cl = np.asarray(getattr(clusters, "labels", clusters))
    benign = labels == benign_label
    if int(benign.sum()) != cl.size:
        raise ValueError(f"{int(benign.sum())} benign rows but {cl.size} cluster labels")
    out = labels.copy()
    out[benign] = [NOISE_CLASS if c == NOISE else f"{SUBCLASS_PREFIX}{c}" for c in cl.tolist()]
    return out


def rejoin_benign(labels, benign_label: str = "normal") -> np.ndarray:
    """Map every ``normal-*`` label back to ``benign_label``; idempotent."""
    labels = np.asarray(labels, dtype=object)
    return np.array([benign_label if str(v).startswith(SUBCLASS_PREFIX) else v for v in labels],
                    dtype=object)


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _round(value, digits=DIGITS):
    if isinstance(value, float):
        return round(value, digits)
    if isinstance(value, dict):
        return {k: _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    return value


@dataclass
class Prepared:
    train: FeatureMatrix
    test: FeatureMatrix
    benign_label: str

    @property
    def benign_rows(self) -> np.ndarray:
        return np.flatnonzero(self.train.labels == self.benign_label)


@dataclass
class Experiment:
    config: ExperimentConfig
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.out = Path(self.config.output)
        self._prepared: Prepared | None = None
        self._clusters: dict[str, ClusterLabels] = {}
        self._models: dict[str, Forest] = {}

    # ------------------------------------------------------------ plumbing
    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        log.info("stage %s: start", name)
        try:
            yield
        except StageError:
            raise
        except ConfigError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = round(time.perf_counter() - start, 3)

    def _fresh(self, name: str, *sections: str) -> bool:
        manifest = self.out / "manifest.json"
        if not manifest.exists():
            return False
        stored = json.loads(manifest.read_text()).get(name)
        return stored == self.config.fingerprint(*sections)

    def _stamp(self, name: str, *sections: str) -> None:
        manifest = self.out / "manifest.json"
        data = json.loads(manifest.read_text()) if manifest.exists() else {}
        data[name] = self.config.fingerprint(*sections)
        write_json(manifest, data)

    def echo(self) -> dict:
        data = self.config.echo()
        data.pop("output", None)
        return data

    # ------------------------------------------------------------ stages
    _PREP_KEYS = ("dataset", "seed")

    def preprocess(self) -> Prepared:
        if self._prepared is not None:
            return self._prepared
        self.out.mkdir(parents=True, exist_ok=True)
        schema = self.config.schema
        train_path, test_path = self.out / "train_matrix.csv", self.out / "test_matrix.csv"
        if self._fresh("preprocess", *self._PREP_KEYS) and train_path.exists() and test_path.exists():
            self._prepared = Prepared(FeatureMatrix.from_csv(train_path),
                                      FeatureMatrix.from_csv(test_path), schema.benign_label)
            return self._prepared
        with self.stage("preprocess"):
            ds = self.config.dataset
            missing = [p for p in (*ds.train, *ds.test) if not Path(p).exists()]
            if missing:
                raise ConfigError(f"input files not found: {missing}")
            train = concat_tables([load_dataset(p, schema) for p in ds.train])
            test = concat_tables([load_dataset(p, schema) for p in ds.test]) if ds.test else None
            if ds.clean == "cicids":
                train = clean_cicids(train)
                test = clean_cicids(test) if test is not None else None
            elif ds.clean != "none":
                raise ConfigError(f"unknown cleaning recipe {ds.clean!r}")
            for col in ds.clamp_binary:
                train = clamp_binary(train, col)
                test = clamp_binary(test, col) if test is not None else None
            if ds.sample_targets or ds.sample_total:
                targets = dict(ds.sample_targets)
                if ds.sample_total:
                    targets = proportional_targets(train, ds.sample_total, targets)
                train = stratified_sample(train, targets, self.config.seed)
            if test is None:
                train, test = split_table(train, ds.test_fraction, self.config.seed)
            if test.schema != train.schema:
                # cleaning may drop different all-zero columns per split
                frame = test.frame.reindex(columns=list(train.schema.names), fill_value=0)
                test = test.with_frame(frame, schema=train.schema)
            train_m, test_m, spec = fit_apply_encoding(train, test, train.schema)
            train_m.to_csv(train_path)
            test_m.to_csv(test_path)
            write_json(self.out / "encoder.json", spec.to_dict())
            write_json(self.out / "preprocess_report.json", {
                "config": self.echo(),
                "n_features": train_m.n_features,
                "train": {"rows": train_m.n_rows, "classes": class_counts(train),
                          "cleaning": removal_summary(train)},
                "test": {"rows": test_m.n_rows, "classes": class_counts(test),
                         "cleaning": removal_summary(test)},
            })
            self._stamp("preprocess", *self._PREP_KEYS)
        self._prepared = Prepared(train_m, test_m, schema.benign_label)
        return self._prepared

    def cluster(self, method: str) -> ClusterLabels:
        if method in self._clusters:
            return self._clusters[method]
        prep = self.preprocess()
        path = self.out / f"labels_{method}.csv"
        keys = (*self._PREP_KEYS, method)
        if self._fresh(f"cluster_{method}", *keys) and path.exists():
            self._clusters[method] = ClusterLabels.from_csv(path)
            return self._clusters[method]
        with self.stage(f"cluster_{method}"):
            benign = prep.train.take(prep.benign_rows)
            if method == "hdbscan":
                labels, tree = hdbscan_fit(benign, self.config.hdbscan)
                (self.out / "condensed_tree_hdbscan.csv").write_text(tree.to_csv(), encoding="utf-8")
                extra = {"noise": labels.n_noise}
            elif method == "meanshift":
                params = replace(self.config.meanshift, seed=self.config.seed)
                modes, labels = mean_shift_fit(benign, params)
                (self.out / "modes_meanshift.csv").write_text(
                    modes.to_csv(benign.feature_names), encoding="utf-8")
                extra = {"bandwidth": modes.bandwidth, "iterations": modes.n_iterations,
                         "underflow_points": modes.n_underflow}
            else:
                raise ConfigError(f"unknown clustering method {method!r}")
            labels.to_csv(path)
            sizes = {str(k): v for k, v in sorted(labels.sizes().items())}
            write_json(self.out / f"cluster_{method}_report.json", _round({
                "method": method, "benign_rows": len(labels), "n_clusters": labels.n_clusters,
                "sizes": sizes, **extra,
            }))
            self._stamp(f"cluster_{method}", *keys)
        self._clusters[method] = labels
        return labels

    def _train_labels(self, model: str) -> np.ndarray:
        prep = self.preprocess()
        if model == "base":
            return prep.train.labels
        method = model.split(":", 1)[1]
        return relabel_benign(prep.train.labels, self.cluster(method), prep.benign_label)

    def model(self, model: str) -> Forest:
        """``"base"`` or ``"clustered:<method>"``."""
        if model in self._models:
            return self._models[model]
        prep = self.preprocess()
        slug = model.replace(":", "_")
        path = self.out / "models" / f"forest_{slug}.json"
        keys = (*self._PREP_KEYS, "forest") + ((model.split(":")[1],) if ":" in model else ())
        if self._fresh(f"model_{slug}", *keys) and path.exists():
            self._models[model] = Forest.load(path)
            return self._models[model]
        labels = self._train_labels(model)
        with self.stage(f"fit_{slug}"):
            forest = fit_forest(prep.train, labels, self.config.forest, seed=self.config.seed)
            path.parent.mkdir(parents=True, exist_ok=True)
            forest.save(path)
            self._stamp(f"model_{slug}", *keys)
        self._models[model] = forest
        return forest

    def evaluate(self) -> dict:
        prep = self.preprocess()
        truth = prep.test.labels
        result: dict = {}
        modes = self.config.modes
        if "base" in modes:
            pred, _ = predict(self.model("base"), prep.test)
            result["base"] = classification_report(truth, pred).to_dict(DIGITS)
        if "clustered" in modes or "rejoined" in modes:
            for method in self.config.methods:
                pred, _ = predict(self.model(f"clustered:{method}"), prep.test)
                if "clustered" in modes:
                    result[f"clustered:{method}"] = classification_report(truth, pred).to_dict(DIGITS)
                if "rejoined" in modes:
                    result[f"rejoined:{method}"] = classification_report(
                        rejoin_benign(truth, prep.benign_label),
                        rejoin_benign(pred, prep.benign_label)).to_dict(DIGITS)
        write_json(self.out / "evaluation_report.json", {"config": self.echo(), "modes": result})
        return result

    def compare(self) -> dict:
        if not {"hdbscan", "meanshift"} <= set(self.config.methods):
            raise ConfigError("compare needs both hdbscan and meanshift in 'methods'")
        a, b = self.cluster("hdbscan"), self.cluster("meanshift")
        with self.stage("compare"):
            scores = agreement(a, b)
            report = {
                "agreement": scores.to_dict(DIGITS),
                "cluster_counts": {"hdbscan": a.n_clusters, "meanshift": b.n_clusters},
                "hdbscan_noise": a.n_noise,
                "benign_rows": len(a),
            }
        write_json(self.out / "compare_report.json", report)
        return report

    def explain(self) -> dict:
        prep = self.preprocess()
        cfg = self.config.explain
        out_dir = self.out / "shap"
        out_dir.mkdir(parents=True, exist_ok=True)
        models = ["base"] + [f"clustered:{m}" for m in self.config.methods]
        report: dict = {"models": {}}
        for model in models:
            forest = self.model(model)
            labels = np.asarray(self._train_labels(model)).astype(str)
            slug = model.replace(":", "_")
            with self.stage(f"explain_{slug}"):
                bg = sample_background(prep.train.values, labels, cfg.background, self.config.seed)
                rng = np.random.default_rng(self.config.seed)
                chosen, owner = [], []
                for cls in forest.classes:
                    rows = np.flatnonzero(labels == cls)
                    take = min(cfg.instances_per_class, rows.size)
                    picked = np.sort(rng.choice(rows, size=take, replace=False))
                    chosen.extend(picked.tolist())
                    owner.extend([cls] * take)
                chosen_arr = np.asarray(chosen, dtype=np.int64)
                shap = tree_shap(forest, prep.train.values[chosen_arr], prep.train.values[bg])
                (out_dir / f"shap_{slug}.csv").write_text(shap.to_csv(chosen), encoding="utf-8")
                owner_arr = np.asarray(owner)
                rankings = {}
                for cls in forest.classes:
                    rows = np.flatnonzero(owner_arr == cls)
                    if rows.size == 0:
                        continue
                    ranking = shap_summary(shap, cls, rows)
                    rankings[cls] = ranking
                    safe = cls.replace("/", "_").replace(" ", "_")
                    (out_dir / f"ranking_{slug}_{safe}.csv").write_text(ranking.to_csv(),
                                                                         encoding="utf-8")
                entry = {"classes": list(forest.classes), "instances": int(chosen_arr.size),
                         "background": int(bg.size),
                         "top_features": {c: r.features[:10] for c, r in rankings.items()}}
                first, second = f"{SUBCLASS_PREFIX}0", f"{SUBCLASS_PREFIX}1"
                if first in rankings and second in rankings:
                    entry["rbo_subclusters_0_1"] = rbo(rankings[first].features,
                                                       rankings[second].features,
                                                       cfg.rbo_p).to_dict(DIGITS)
                report["models"][model] = entry
        write_json(self.out / "explain_report.json", report)
        return report

    def embed(self) -> dict:
        prep = self.preprocess()
        cfg = self.config.embed
        benign_rows = prep.benign_rows
        rng = np.random.default_rng(self.config.seed)
        local = np.arange(benign_rows.size)
        if local.size > cfg.max_rows:
            local = np.sort(rng.choice(local, size=cfg.max_rows, replace=False))
        columns = {"base_label": [prep.benign_label] * local.size}
        for method in ("hdbscan", "meanshift"):
            if method in self.config.methods:
                columns[f"{method}_label"] = self.cluster(method).labels[local].tolist()
            else:
                columns[f"{method}_label"] = [""] * local.size
        with self.stage("embed"):
            params = TsneParams(perplexity=cfg.perplexity, iterations=cfg.iterations,
                                seed=self.config.seed)
            emb = tsne_embed(prep.train.values[benign_rows[local]], params=params)
            emb.to_csv(self.out / "embedding.csv", columns)
        report = {"rows": int(local.size), "perplexity": cfg.perplexity,
                  "iterations": cfg.iterations, "kl_divergence": round(emb.kl_divergence, DIGITS)}
        write_json(self.out / "embed_report.json", report)
        return report

    def run_all(self) -> dict:
        prep = self.preprocess()
        clusters = {m: self.cluster(m) for m in self.config.methods}
        report = {
            "config": self.echo(),
            "rows": {"train": prep.train.n_rows, "test": prep.test.n_rows,
                     "benign_train": int(prep.benign_rows.size), "features": prep.train.n_features},
            "cluster_counts": {m: c.n_clusters for m, c in clusters.items()},
            "evaluation": self.evaluate(),
        }
        if len(clusters) == 2:
            report["comparison"] = self.compare()
        explained = self.explain()
        report["rbo"] = {m: e["rbo_subclusters_0_1"] for m, e in explained["models"].items()
                         if "rbo_subclusters_0_1" in e}
        report["embedding"] = self.embed()
        write_json(self.out / "run_report.json", report)
        write_json(self.out / "timings.json", self.timings)
        return report


def run_experiment(config: ExperimentConfig) -> dict:
    return Experiment(config).run_all()


def compare_methods(config: ExperimentConfig) -> dict:
    return Experiment(config).compare()
