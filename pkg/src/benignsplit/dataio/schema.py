from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from benignsplit.errors import SchemaError

KINDS = ("numeric", "categorical", "binary", "label", "drop")
FEATURE_KINDS = ("numeric", "categorical", "binary")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple[Column, ...]
    benign_label: str
    attack_labels: tuple[str, ...] = ()
    has_header: bool = True

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"schema {self.name!r}: duplicate column names {dupes}")
        bad = [c.kind for c in self.columns if c.kind not in KINDS]
        if bad:
            raise SchemaError(f"schema {self.name!r}: unknown column kinds {bad}")
        n_label = sum(c.kind == "label" for c in self.columns)
        if n_label != 1:
            raise SchemaError(f"schema {self.name!r}: expected exactly one label column, got {n_label}")
        if self.benign_label in self.attack_labels:
            raise SchemaError(f"schema {self.name!r}: benign label listed as an attack")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def label_column(self) -> str:
        return next(c.name for c in self.columns if c.kind == "label")

    def kind_of(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise SchemaError(f"column {name!r} not in schema {self.name!r}")

    def columns_of(self, *kinds: str) -> list[str]:
        return [c.name for c in self.columns if c.kind in kinds]

    @property
    def feature_columns(self) -> list[str]:
        return self.columns_of(*FEATURE_KINDS)

    @property
    def known_labels(self) -> set[str]:
        return {self.benign_label, *self.attack_labels}

    def without(self, names) -> "DatasetSchema":
        gone = set(names)
        return replace(self, columns=tuple(c for c in self.columns if c.name not in gone))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "benign_label": self.benign_label,
            "attack_labels": list(self.attack_labels),
            "has_header": self.has_header,
            "columns": [{c.name: c.kind} for c in self.columns],
        }


def schema_from_dict(raw: dict) -> DatasetSchema:
    """Build a schema from the YAML shape written by :meth:`DatasetSchema.to_dict`.

    Columns may be given as ``{name: kind}`` single-key mappings or as
    ``{name: ..., kind: ...}`` records.
    """
    if not isinstance(raw, dict):
        raise SchemaError("schema must be a mapping")
    missing = [k for k in ("name", "columns", "benign_label") if k not in raw]
    if missing:
        raise SchemaError(f"schema missing keys: {missing}")
    cols = []
    for entry in raw["columns"]:
        if isinstance(entry, dict) and set(entry) == {"name", "kind"}:
            cols.append(Column(str(entry["name"]), str(entry["kind"])))
        elif isinstance(entry, dict) and len(entry) == 1:
            (name, kind), = entry.items()
            cols.append(Column(str(name), str(kind)))
        else:
            raise SchemaError(f"bad column entry: {entry!r}")
    return DatasetSchema(
        name=str(raw["name"]),
        columns=tuple(cols),
        benign_label=str(raw["benign_label"]),
        attack_labels=tuple(str(a) for a in raw.get("attack_labels") or ()),
        has_header=bool(raw.get("has_header", True)),
    )


def load_schema(path: str | Path) -> DatasetSchema:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read schema {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SchemaError(f"schema {path} is not valid YAML: {exc}") from exc
    return schema_from_dict(raw)


def _cols(spec: list[tuple[str, str]]) -> tuple[Column, ...]:
    return tuple(Column(n, k) for n, k in spec)


_NSL_NUMERIC_HEAD = ["duration"]
_NSL_CATEGORICAL = ["protocol_type", "service", "flag"]
_NSL_REST = [
    ("src_bytes", "numeric"), ("dst_bytes", "numeric"), ("land", "binary"),
    ("wrong_fragment", "numeric"), ("urgent", "numeric"), ("hot", "numeric"),
    ("num_failed_logins", "numeric"), ("logged_in", "binary"),
    ("num_compromised", "numeric"), ("root_shell", "numeric"),
    ("su_attempted", "numeric"), ("num_root", "numeric"),
    ("num_file_creations", "numeric"), ("num_shells", "numeric"),
    ("num_access_files", "numeric"), ("num_outbound_cmds", "numeric"),
    ("is_host_login", "binary"), ("is_guest_login", "binary"),
    ("count", "numeric"), ("srv_count", "numeric"), ("serror_rate", "numeric"),
    ("srv_serror_rate", "numeric"), ("rerror_rate", "numeric"),
    ("srv_rerror_rate", "numeric"), ("same_srv_rate", "numeric"),
    ("diff_srv_rate", "numeric"), ("srv_diff_host_rate", "numeric"),
    ("dst_host_count", "numeric"), ("dst_host_srv_count", "numeric"),
    ("dst_host_same_srv_rate", "numeric"), ("dst_host_diff_srv_rate", "numeric"),
    ("dst_host_same_src_port_rate", "numeric"),
    ("dst_host_srv_diff_host_rate", "numeric"), ("dst_host_serror_rate", "numeric"),
    ("dst_host_srv_serror_rate", "numeric"), ("dst_host_rerror_rate", "numeric"),
    ("dst_host_srv_rerror_rate", "numeric"),
]
_NSL_ATTACKS = (
    "back", "land", "neptune", "pod", "smurf", "teardrop", "apache2", "mailbomb",
    "processtable", "udpstorm", "worm", "ipsweep", "nmap", "portsweep", "satan",
    "mscan", "saint", "ftp_write", "guess_passwd", "imap", "multihop", "phf", "spy",
    "warezclient", "warezmaster", "named", "sendmail", "snmpgetattack", "snmpguess",
    "xlock", "xsnoop", "httptunnel", "buffer_overflow", "loadmodule", "perl",
    "rootkit", "ps", "sqlattack", "xterm",
)

NSL_KDD = DatasetSchema(
    name="NSL-KDD",
    columns=_cols(
        [(c, "numeric") for c in _NSL_NUMERIC_HEAD]
        + [(c, "categorical") for c in _NSL_CATEGORICAL]
        + _NSL_REST
        + [("label", "label"), ("difficulty", "drop")]
    ),
    benign_label="normal",
    attack_labels=_NSL_ATTACKS,
    has_header=False,
)

_UNSW_NUMERIC = [
    "dur", "spkts", "dpkts", "sbytes", "dbytes", "rate", "sttl", "dttl", "sload",
    "dload", "sloss", "dloss", "sinpkt", "dinpkt", "sjit", "djit", "swin", "stcpb",
    "dtcpb", "dwin", "tcprtt", "synack", "ackdat", "smean", "dmean", "trans_depth",
    "response_body_len", "ct_srv_src", "ct_state_ttl", "ct_dst_ltm",
    "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm",
]

UNSW_NB15 = DatasetSchema(
    name="UNSW-NB15",
    columns=_cols(
        [("id", "drop"), ("dur", "numeric"), ("proto", "categorical"),
         ("service", "categorical"), ("state", "categorical")]
        + [(c, "numeric") for c in _UNSW_NUMERIC[1:]]
        + [("is_ftp_login", "binary"), ("ct_ftp_cmd", "numeric"),
           ("ct_flw_http_mthd", "numeric"), ("ct_src_ltm", "numeric"),
           ("ct_srv_dst", "numeric"), ("is_sm_ips_ports", "binary"),
           ("attack_cat", "label"), ("label", "drop")]
    ),
    benign_label="Normal",
    attack_labels=("Fuzzers", "Analysis", "Backdoor", "DoS", "Exploits", "Generic",
                   "Reconnaissance", "Shellcode", "Worms"),
)

_CIC_FEATURES = [
    "Destination Port", "Flow Duration", "Total Fwd Packets", "Total Backward Packets",
    "Total Length of Fwd Packets", "Total Length of Bwd Packets",
    "Fwd Packet Length Max", "Fwd Packet Length Min", "Fwd Packet Length Mean",
    "Fwd Packet Length Std", "Bwd Packet Length Max", "Bwd Packet Length Min",
    "Bwd Packet Length Mean", "Bwd Packet Length Std", "Flow Bytes/s",
    "Flow Packets/s", "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
    "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
    "Bwd IAT Total", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s", "Bwd Packets/s",
    "Min Packet Length", "Max Packet Length", "Packet Length Mean",
    "Packet Length Std", "Packet Length Variance", "FIN Flag Count",
    "SYN Flag Count", "RST Flag Count", "PSH Flag Count", "ACK Flag Count",
    "URG Flag Count", "CWE Flag Count", "ECE Flag Count", "Down/Up Ratio",
    "Average Packet Size", "Avg Fwd Segment Size", "Avg Bwd Segment Size",
    "Fwd Header Length.1", "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk",
    "Fwd Avg Bulk Rate", "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk",
    "Bwd Avg Bulk Rate", "Subflow Fwd Packets", "Subflow Fwd Bytes",
    "Subflow Bwd Packets", "Subflow Bwd Bytes", "Init_Win_bytes_forward",
    "Init_Win_bytes_backward", "act_data_pkt_fwd", "min_seg_size_forward",
    "Active Mean", "Active Std", "Active Max", "Active Min", "Idle Mean", "Idle Std",
    "Idle Max", "Idle Min",
]

CICIDS2017 = DatasetSchema(
    name="CIC-IDS2017",
    columns=_cols([(c, "numeric") for c in _CIC_FEATURES] + [("Label", "label")]),
    benign_label="BENIGN",
    attack_labels=(
        "DoS Hulk", "PortScan", "DDoS", "DoS GoldenEye", "FTP-Patator", "SSH-Patator",
        "DoS slowloris", "DoS Slowhttptest", "Bot", "Web Attack - Brute Force",
        "Web Attack - XSS", "Infiltration", "Web Attack - Sql Injection", "Heartbleed",
    ),
)

BUILTIN_SCHEMAS = {s.name: s for s in (NSL_KDD, UNSW_NB15, CICIDS2017)}


def get_schema(name_or_path: str | Path) -> DatasetSchema:
    """Return a built-in schema by name, or load one from a YAML file."""
    key = str(name_or_path)
    for name, schema in BUILTIN_SCHEMAS.items():
        if key.lower() in (name.lower(), name.lower().replace("-", "")):
            return schema
    path = Path(key)
    if path.exists():
        return load_schema(path)
    raise SchemaError(f"unknown schema {key!r}; built-ins: {sorted(BUILTIN_SCHEMAS)}")
