"""Small IDS-like dataset with a deliberately heterogeneous benign class.

Benign flows come from three well-separated generative modes (think web,
DNS and bulk transfer); three attack classes sit elsewhere in feature
space. Used for the desk-scale pipeline check and the CLI tests.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import yaml

BENIGN = "normal"
ATTACKS = ("dos", "probe", "exfil")
NUMERIC = ("duration", "src_bytes", "dst_bytes", "pkt_rate", "mean_iat", "flag_ratio")

# (centre per numeric feature, spread, proto weights, service weights)
_MODES = {
    "web": ((0.2, 0.3, 0.7, 0.2, 0.2, 0.1), 0.03, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
    "dns": ((0.05, 0.05, 0.1, 0.6, 0.05, 0.0), 0.03, (0.0, 1.0, 0.0), (0.0, 1.0, 0.0)),
    "bulk": ((0.8, 0.8, 0.3, 0.1, 0.7, 0.1), 0.03, (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "dos": ((0.02, 0.02, 0.02, 0.95, 0.01, 0.9), 0.04, (0.5, 0.0, 0.5), (0.7, 0.0, 0.3)),
    "probe": ((0.01, 0.01, 0.0, 0.5, 0.4, 0.8), 0.04, (0.4, 0.2, 0.4), (0.3, 0.3, 0.4)),
    "exfil": ((0.5, 0.1, 0.95, 0.3, 0.5, 0.2), 0.04, (1.0, 0.0, 0.0), (0.2, 0.0, 0.8)),
}
PROTOS = ("tcp", "udp", "icmp")
SERVICES = ("http", "dns", "ftp")


def make_frame(n_rows: int = 5000, seed: int = 0, benign_share: float = 0.6) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    n_benign = int(round(n_rows * benign_share))
    per_benign = np.full(3, n_benign // 3)
    per_benign[: n_benign % 3] += 1
    n_attack = n_rows - n_benign
    per_attack = np.full(3, n_attack // 3)
    per_attack[: n_attack % 3] += 1
    parts = []
    groups = [(m, BENIGN, c) for m, c in zip(("web", "dns", "bulk"), per_benign)]
    groups += [(a, a, c) for a, c in zip(ATTACKS, per_attack)]
    for mode, label, count in groups:
        centre, spread, proto_w, svc_w = _MODES[mode]
        values = rng.normal(centre, spread, size=(count, len(NUMERIC)))
        frame = pd.DataFrame(np.abs(values).round(5), columns=list(NUMERIC))
        frame.insert(0, "proto", rng.choice(PROTOS, size=count, p=proto_w))
        frame.insert(1, "service", rng.choice(SERVICES, size=count, p=svc_w))
        frame["label"] = label
        parts.append(frame)
    frame = pd.concat(parts, ignore_index=True)
    return frame.iloc[rng.permutation(len(frame))].reset_index(drop=True)


def schema_dict() -> dict:
    columns = [{"name": "proto", "kind": "categorical"}, {"name": "service", "kind": "categorical"}]
    columns += [{"name": c, "kind": "numeric"} for c in NUMERIC]
    columns.append({"name": "label", "kind": "label"})
    return {"name": "synthetic-ids", "columns": columns, "benign_label": BENIGN,
            "attack_labels": list(ATTACKS), "has_header": True}


def config_dict(output: str = "run") -> dict:
    return {
        "dataset": {"schema": "schema.yaml", "train": "train.csv", "test": "test.csv"},
        "output": output,
        "seed": 0,
        "methods": ["hdbscan", "meanshift"],
        "modes": ["base", "clustered", "rejoined"],
        "hdbscan": {"min_samples": 10, "min_cluster_size": 100},
        "meanshift": {"quantile": 0.3, "sample_cap": 500},
        "forest": {"n_trees": 25, "max_depth": 8},
        "explain": {"background": 40, "instances_per_class": 4},
        "embed": {"max_rows": 600, "perplexity": 30, "iterations": 300},
    }


def write_synthetic(directory: str | Path, n_rows: int = 5000, seed: int = 0,
                    test_fraction: float = 0.3) -> Path:
    """Write train.csv, test.csv, schema.yaml and config.yaml; return the
    config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frame = make_frame(n_rows, seed)
    n_test = int(round(len(frame) * test_fraction))
    frame.iloc[n_test:].to_csv(directory / "train.csv", index=False, lineterminator="\n")
    frame.iloc[:n_test].to_csv(directory / "test.csv", index=False, lineterminator="\n")
    (directory / "schema.yaml").write_text(yaml.safe_dump(schema_dict(), sort_keys=False))
    config = directory / "config.yaml"
    config.write_text(yaml.safe_dump(config_dict(), sort_keys=False))
    return config
