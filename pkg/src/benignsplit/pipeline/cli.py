"""Command line entry point: ``benignsplit <command> --config run.yaml``.

Exit codes: 0 success, 1 config or schema error, 2 data error, 3 any other
failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from benignsplit.errors import ConfigError, DataError
from benignsplit.pipeline.config import METHODS, MODES, load_config
from benignsplit.pipeline.experiment import Experiment, StageError

log = logging.getLogger("benignsplit")

COMMANDS = {
    "preprocess": "load, clean, split and encode the dataset",
    "cluster": "cluster benign training rows",
    "evaluate": "train and score forests in each labeling mode",
    "compare": "agreement between the two clustering methods",
    "explain": "per-class SHAP rankings and RBO overlaps",
    "embed": "2-D t-SNE embedding of benign training rows",
    "run-all": "every stage in order",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="benignsplit",
                                     description="Test whether benign IDS traffic is heterogeneous.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in COMMANDS.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--method", choices=[*METHODS, "both"])
        p.add_argument("--mode", choices=[*MODES, "all"])
    synth = sub.add_parser("make-synthetic", help="write a small synthetic dataset and config")
    synth.add_argument("directory")
    synth.add_argument("--rows", type=int, default=5000)
    synth.add_argument("--seed", type=int, default=0)
    return parser


def _config(args):
    config = load_config(args.config)
    methods = None
    if args.method:
        methods = METHODS if args.method == "both" else (args.method,)
    modes = None
    if args.mode:
        modes = MODES if args.mode == "all" else (args.mode,)
    return config.with_overrides(seed=args.seed, output=args.out, methods=methods, modes=modes)


def _run(args) -> dict:
    if args.command == "make-synthetic":
        from benignsplit.synthetic import write_synthetic
        return {"config": str(write_synthetic(args.directory, args.rows, args.seed))}
    exp = Experiment(_config(args))
    if args.command == "preprocess":
        prep = exp.preprocess()
        return {"train_rows": prep.train.n_rows, "test_rows": prep.test.n_rows}
    if args.command == "cluster":
        return {m: exp.cluster(m).n_clusters for m in exp.config.methods}
    if args.command == "evaluate":
        return {k: v["accuracy"] for k, v in exp.evaluate().items()}
    if args.command == "compare":
        return exp.compare()["agreement"]
    if args.command == "explain":
        return {m: sorted(e) for m, e in exp.explain()["models"].items()}
    if args.command == "embed":
        return exp.embed()
    report = exp.run_all()
    return {"cluster_counts": report["cluster_counts"],
            "accuracy": {k: v["accuracy"] for k, v in report["evaluation"].items()}}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, ConfigError):
        return 1
    if isinstance(exc, DataError):
        return 2
    return 3


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = _run(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        if args.verbose:
            log.exception("command failed")
        return code
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
