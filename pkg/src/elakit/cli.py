"""Command line front end.

Every command resolves its configuration from defaults, an optional JSON
config file (--config) and explicit flags, in that precedence order, then
writes its outputs plus a ``<output>.config.json`` sidecar holding the
resolved configuration.  Each output file starts with a comment line
carrying a short hash of that configuration so results can be traced back.

Exit codes: 0 success, 2 configuration error, 3 budget timeout, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import dimred, harness, ml, testbed
from .errors import BudgetExceededError
from .features import ALL_GROUPS, FeatureConfig, compute_group
from .sampling import DesignSample, build_design, default_design_size
from .testbed import Bounds

__all__ = ["entry", "main"]

OUTPUT_ROOT_ENV = "ELAKIT_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4


def _resolve_path(path: str) -> str:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _emit_config(out_path: str, config: dict):
    with open(out_path + ".config.json", "w") as fh:
        json.dump(config, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _format_value(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_csv(path: str, header, rows, config: dict):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config {_config_hash(config)}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    _emit_config(path, config)


def _read_table_csv(path: str):
    """Read a CSV written by this tool: comment lines, header, float body."""
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    if not lines:
        raise ValueError(f"{path} holds no data")
    header = next(csv.reader([lines[0]]))
    body = np.loadtxt(io.StringIO("".join(lines[1:])), delimiter=",", ndmin=2)
    return header, body


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < JSON config file < explicit CLI flags."""
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            resolved[key] = file_values[key]
        else:
            resolved[key] = default
    return resolved


def _feature_config(cfg: dict, seed_key: str = "seed") -> FeatureConfig:
    import time

    deadline = None
    budget = cfg.get("budget_seconds")
    if budget:
        deadline = time.perf_counter() + float(budget)
    return FeatureConfig(
        seed=int(cfg[seed_key]), blocks=int(cfg.get("blocks", 3)), deadline=deadline
    )


# -- commands -----------------------------------------------------------------

def cmd_sample(args) -> int:
    cfg = _resolve(args, {
        "fid": 1, "dim": 2, "inst": 1, "size": None, "seed": 0, "out": "design.csv",
    })
    cfg["command"] = "sample"
    size = cfg["size"] if cfg["size"] is not None else default_design_size(cfg["dim"])
    cfg["size"] = int(size)
    instance = testbed.make_instance(int(cfg["fid"]), int(cfg["dim"]), int(cfg["inst"]))
    design = build_design(instance, cfg["size"], int(cfg["seed"]))
    out = _resolve_path(cfg["out"])
    header = [f"x{j + 1}" for j in range(design.dimension)] + ["y"]
    rows = [
        [_format_value(v) for v in np.append(design.points[i], design.objectives[i])]
        for i in range(design.size)
    ]
    _write_csv(out, header, rows, cfg)
    return EXIT_OK


def _design_from_csv(path: str) -> DesignSample:
    header, body = _read_table_csv(path)
    if header[-1] != "y" or not header[0].startswith("x"):
        raise ValueError(f"{path} is not a design CSV (expected x1..xn,y header)")
    points, y = body[:, :-1], body[:, -1]
    pad = np.maximum(1e-9, 1e-9 * np.abs(points).max(axis=0))
    bounds = Bounds(points.min(axis=0) - pad, points.max(axis=0) + pad)
    return DesignSample(points, y, bounds, seed=0)


def cmd_reduce(args) -> int:
    cfg = _resolve(args, {"m": 2, "infile": None, "out": "reduced.csv"})
    cfg["command"] = "reduce"
    if not cfg["infile"]:
        raise ValueError("reduce needs --in pointing at a design CSV")
    design = _design_from_csv(_resolve_path(cfg["infile"]))
    reduced = dimred.reduce(design, int(cfg["m"]))
    out = _resolve_path(cfg["out"])
    header = [f"z{j + 1}" for j in range(reduced.m)] + ["y"]
    rows = [
        [_format_value(v) for v in np.append(reduced.points[i], reduced.objectives[i])]
        for i in range(reduced.size)
    ]
    _write_csv(out, header, rows, cfg)
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _resolve(args, {
        "fid": 1, "dim": 2, "inst": 1, "size": None, "seed": 0,
        "groups": "ela_distr", "reduced": False, "m": 2, "blocks": 3,
        "budget_seconds": None, "out": "features.csv",
    })
    cfg["command"] = "features"
    size = cfg["size"] if cfg["size"] is not None else default_design_size(cfg["dim"])
    cfg["size"] = int(size)
    groups = [g.strip() for g in str(cfg["groups"]).split(",") if g.strip()]
    for group in groups:
        if group not in ALL_GROUPS:
            raise ValueError(f"unknown feature group {group!r}")
    instance = testbed.make_instance(int(cfg["fid"]), int(cfg["dim"]), int(cfg["inst"]))
    design = build_design(instance, cfg["size"], int(cfg["seed"]))
    data = dimred.reduce(design, int(cfg["m"])) if cfg["reduced"] else design
    config = _feature_config(cfg)
    names, values = [], []
    for group in groups:
        vector = compute_group(group, data, config)
        names += vector.names()
        values += vector.values()
    out = _resolve_path(cfg["out"])
    _write_csv(out, names, [[_format_value(v) for v in values]], cfg)
    return EXIT_OK


def cmd_timebench(args) -> int:
    cfg = _resolve(args, {
        "groups": "ela_distr", "dims": "2,3,5", "reps": harness.DEFAULT_REPS,
        "seed": 0, "size": None, "budget_seconds": harness.DEFAULT_BUDGET_SECONDS,
        "m": 2, "fid": 1, "inst": 1, "out": "timing.csv",
    })
    cfg["command"] = "timebench"
    groups = [g.strip() for g in str(cfg["groups"]).split(",") if g.strip()]
    dims = _int_list(str(cfg["dims"]))
    records = harness.time_features(
        groups,
        dims,
        reps=int(cfg["reps"]),
        seed=int(cfg["seed"]),
        function_id=int(cfg["fid"]),
        instance_seed=int(cfg["inst"]),
        sample_size=None if cfg["size"] is None else int(cfg["size"]),
        budget_seconds=float(cfg["budget_seconds"]),
        m=int(cfg["m"]),
    )
    rows = [
        [r.group, r.dimension, r.sample_size, r.rep, _format_value(r.seconds), r.status]
        for r in records
    ]
    out = _resolve_path(cfg["out"])
    _write_csv(out, ["group", "dim", "sample_size", "rep", "seconds", "status"], rows, cfg)
    return EXIT_OK


def _build_dataset(cfg: dict) -> harness.Dataset:
    name = str(cfg["feature_set"])
    if name not in harness.FEATURE_SETS:
        raise ValueError(
            f"unknown feature set {name!r}; choose from {sorted(harness.FEATURE_SETS)}"
        )
    return harness.assemble_dataset(
        harness.FEATURE_SETS[name],
        int(cfg["dim"]),
        seed=int(cfg["seed"]),
        sample_size=None if cfg.get("size") is None else int(cfg["size"]),
        m=int(cfg["m"]),
        budget_seconds=cfg.get("budget_seconds"),
    )


def _run_cv(cfg: dict, dataset: harness.Dataset) -> harness.CvResult:
    cv = str(cfg["cv"]).lower()
    if cv not in ("lopo", "loio"):
        raise ValueError("cv must be lopo or loio")
    runner = harness.lopo_cv if cv == "lopo" else harness.loio_cv
    return runner(dataset, str(cfg["task"]), int(cfg["n_trees"]), int(cfg["seed"]))


_CLASSIFY_DEFAULTS = {
    "feature_set": "C7-D2", "dim": 5, "task": "multimodality", "cv": "lopo",
    "n_trees": harness.DEFAULT_TREES, "seed": 0, "size": None, "m": 2,
    "budget_seconds": None, "out": "cv.csv",
}


def cmd_classify(args) -> int:
    cfg = _resolve(args, dict(_CLASSIFY_DEFAULTS, importance_out=None))
    cfg["command"] = "classify"
    if str(cfg["task"]) not in testbed.PROPERTY_NAMES:
        raise ValueError(f"unknown task {cfg['task']!r}")
    dataset = _build_dataset(cfg)
    result = _run_cv(cfg, dataset)
    rows = [
        [result.task, result.feature_set, result.dimension, key, _format_value(acc)]
        for key, acc in zip(result.fold_keys, result.fold_accuracies)
    ]
    out = _resolve_path(cfg["out"])
    _write_csv(out, ["task", "feature_set", "dim", "fold", "accuracy"], rows, cfg)
    if cfg["importance_out"]:
        _write_importance(_resolve_path(cfg["importance_out"]), result, cfg)
    return EXIT_OK


def _write_importance(path: str, result: harness.CvResult, cfg: dict):
    order = sorted(
        zip(result.feature_names, result.importance_avg_ranks), key=lambda t: (t[1], t[0])
    )
    rows = [[name, _format_value(rank)] for name, rank in order]
    _write_csv(path, ["feature", "avg_rank"], rows, cfg)


def cmd_importance(args) -> int:
    cfg = _resolve(args, dict(_CLASSIFY_DEFAULTS, out="importance.csv"))
    cfg["command"] = "importance"
    if str(cfg["task"]) not in testbed.PROPERTY_NAMES:
        raise ValueError(f"unknown task {cfg['task']!r}")
    dataset = _build_dataset(cfg)
    result = _run_cv(cfg, dataset)
    _write_importance(_resolve_path(cfg["out"]), result, cfg)
    return EXIT_OK


def cmd_sweepm(args) -> int:
    cfg = _resolve(args, {
        "feature_set": "C7-D2", "dims": "5,10", "m_values": "2,4",
        "task": "multimodality", "n_trees": harness.DEFAULT_TREES, "seed": 0,
        "size": None, "budget_seconds": None, "out": "sweepm.csv",
    })
    cfg["command"] = "sweepm"
    name = str(cfg["feature_set"])
    if name not in harness.FEATURE_SETS:
        raise ValueError(f"unknown feature set {name!r}")
    spec = harness.FEATURE_SETS[name]
    if not spec.requires_reduction():
        raise ValueError("sweepm needs a feature set with reduced groups")
    dims = _int_list(str(cfg["dims"]))
    m_values = _int_list(str(cfg["m_values"]))

    def builder(dim, m):
        return harness.assemble_dataset(
            spec,
            dim,
            seed=int(cfg["seed"]),
            sample_size=None if cfg["size"] is None else int(cfg["size"]),
            m=m,
            budget_seconds=cfg.get("budget_seconds"),
        )

    table = harness.sweep_m(
        builder, dims, m_values, str(cfg["task"]), int(cfg["n_trees"]), int(cfg["seed"])
    )
    header = ["dim"] + [f"m{m}" for m in m_values]
    rows = []
    for i, dim in enumerate(dims):
        row = [dim]
        for j in range(len(m_values)):
            value = table.accuracy[i, j]
            row.append("Na" if np.isnan(value) else repr(float(value)))
        rows.append(row)
    _write_csv(_resolve_path(cfg["out"]), header, rows, cfg)
    return EXIT_OK


def cmd_similarity(args) -> int:
    cfg = _resolve(args, {
        "dim": 5, "m": 2, "groups": "ela_meta", "seed": 0, "size": None,
        "budget_seconds": None, "out": "similarity.csv",
    })
    cfg["command"] = "similarity"
    groups = tuple(g.strip() for g in str(cfg["groups"]).split(",") if g.strip())
    for group in groups:
        if group not in ALL_GROUPS:
            raise ValueError(f"unknown feature group {group!r}")
    original_spec = harness.FeatureSetSpec("original", tuple((g, False) for g in groups))
    reduced_spec = harness.FeatureSetSpec("reduced", tuple((g, True) for g in groups))
    common = dict(
        seed=int(cfg["seed"]),
        sample_size=None if cfg["size"] is None else int(cfg["size"]),
        m=int(cfg["m"]),
        drop_and_impute=False,
        budget_seconds=cfg.get("budget_seconds"),
    )
    original = harness.assemble_dataset(original_spec, int(cfg["dim"]), **common)
    reduced = harness.assemble_dataset(reduced_spec, int(cfg["dim"]), **common)
    rows = [
        [feature, _format_value(tau), n]
        for feature, tau, n in harness.similarity(original, reduced)
    ]
    _write_csv(_resolve_path(cfg["out"]), ["feature", "tau", "n_functions"], rows, cfg)
    return EXIT_OK


def cmd_suite(args) -> int:
    if args.suite_command == "list":
        text = json.dumps(testbed.suite_manifest(), indent=2) + "\n"
        if args.out:
            with open(_resolve_path(args.out), "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    # labels
    fmt = args.format or "csv"
    if fmt != "csv":
        raise ValueError(f"unsupported labels format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["function_id", "name", "category", *testbed.PROPERTY_NAMES])
    for row in testbed.suite_manifest():
        writer.writerow(
            [row["function_id"], row["name"], row["category"]]
            + [row["labels"][p] for p in testbed.PROPERTY_NAMES]
        )
    if args.out:
        with open(_resolve_path(args.out), "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- wiring -------------------------------------------------------------------

def _add_common(parser, *flags):
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--jobs", type=int, default=1,
                        help="intra-run parallelism (currently serial)")
    if "seed" in flags:
        parser.add_argument("--seed", type=int)
    if "out" in flags:
        parser.add_argument("--out")
    if "size" in flags:
        parser.add_argument("--size", type=int, help="sample size (default 50 * dim)")
    if "budget" in flags:
        parser.add_argument("--budget-seconds", dest="budget_seconds", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elakit",
        description="Landscape features, rank-weighted reduction and experiment drivers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw an LHS design and evaluate an instance")
    p.add_argument("--fid", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--inst", type=int)
    _add_common(p, "seed", "out", "size")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reduce", help="rank-weighted PCA reduction of a design CSV")
    p.add_argument("--in", dest="infile")
    p.add_argument("--m", type=int)
    _add_common(p, "out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("features", help="compute feature groups on one instance")
    p.add_argument("--fid", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--inst", type=int)
    p.add_argument("--groups", help="comma-separated group names")
    p.add_argument("--reduced", action="store_const", const=True, default=None,
                   help="compute on the reduced sample")
    p.add_argument("--m", type=int)
    p.add_argument("--blocks", type=int)
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("timebench", help="wall-clock cost of groups across dimensions")
    p.add_argument("--groups")
    p.add_argument("--dims", help="comma-separated dimensions")
    p.add_argument("--reps", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--fid", type=int)
    p.add_argument("--inst", type=int)
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_timebench)

    p = sub.add_parser("classify", help="property classification with grouped CV")
    p.add_argument("--set", dest="feature_set")
    p.add_argument("--dim", type=int)
    p.add_argument("--task")
    p.add_argument("--cv", choices=("lopo", "loio"))
    p.add_argument("--trees", dest="n_trees", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--importance-out", dest="importance_out")
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("importance", help="average feature importance ranks over folds")
    p.add_argument("--set", dest="feature_set")
    p.add_argument("--dim", type=int)
    p.add_argument("--task")
    p.add_argument("--cv", choices=("lopo", "loio"))
    p.add_argument("--trees", dest="n_trees", type=int)
    p.add_argument("--m", type=int)
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("sweepm", help="accuracy across a (dim, m) grid")
    p.add_argument("--set", dest="feature_set")
    p.add_argument("--dims")
    p.add_argument("--m-values", dest="m_values")
    p.add_argument("--task")
    p.add_argument("--trees", dest="n_trees", type=int)
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_sweepm)

    p = sub.add_parser("similarity", help="original vs reduced feature rank similarity")
    p.add_argument("--dim", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--groups")
    _add_common(p, "seed", "out", "size", "budget")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("suite", help="describe the benchmark suite")
    suite_sub = p.add_subparsers(dest="suite_command", required=True)
    ps = suite_sub.add_parser("list", help="JSON manifest of all functions")
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_suite)
    ps = suite_sub.add_parser("labels", help="property label table")
    ps.add_argument("--format", choices=("csv",))
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_suite)
    return parser


def entry(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():  # console entry point
    sys.exit(entry())
