"""Command-line entry point: ``standin``, ``train``, ``generate``, ``evaluate``.

Exit codes: 0 on success, 1 when a run fails, 2 for bad arguments, missing
files or invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import GanConfig
from .data import TableSchema, encode, decode, fit_transforms, load_csv, write_csv
from .distributed import ReplicaSet, run_distributed_training
from .errors import ConfigError, ParseError, SchemaError, VocabularyError
from .evaluation import SplitSpec, full_report
from .models import GanModel, generate, load_checkpoint, train
from .plots import column_charts
from .standin import StandinSpec, default_standin_spec, make_standin_dataset

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
RUN_KEYS = ("schema", "data", "standin", "out", "targets")
_USAGE_ERRORS = (ConfigError, SchemaError, ParseError, VocabularyError, ValueError, KeyError,
                 FileNotFoundError, IsADirectoryError, json.JSONDecodeError)


class UsageError(Exception):
    """Invalid input detected before any work started."""


def _validating(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _USAGE_ERRORS as exc:
        raise UsageError(str(exc)) from exc


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _check_columns(path, schema):
    with open(path, encoding="utf-8", newline="") as f:
        header = next(csv.reader(f), [])
    missing = [n for n in schema.names if n not in header]
    if missing:
        raise UsageError(f"{path}: missing column(s) {', '.join(missing)}")


def _standin_spec(path):
    return StandinSpec.load(path) if path else default_standin_spec()


def cmd_standin(args):
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    spec = _validating(_standin_spec, args.spec)
    table = make_standin_dataset(spec, args.n, np.random.default_rng(args.seed))
    write_csv(table, args.out)
    print(f"wrote {len(table)} rows to {args.out}")
    return EXIT_OK


def load_run_config(path, overrides=None):
    """Read a run config: GanConfig fields plus ``schema``, ``data`` or
    ``standin``, ``out`` and ``targets``. Relative paths resolve against the
    config file's directory.
    """
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError("config", "must be a JSON object")
    base = Path(path).resolve().parent

    def resolve(p):
        return None if p is None else str(base / p)

    run = {k: raw.pop(k) for k in RUN_KEYS if k in raw}
    for key in ("schema", "data", "out"):
        if key in run:
            run[key] = resolve(run[key])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            raw["seed"] = value
        else:
            run[key] = value
    cfg = GanConfig.from_dict(raw)
    if "schema" not in run:
        raise ConfigError("schema", "a schema path is required (config key or --schema)")
    if "data" in run and "standin" in run:
        raise ConfigError("data", "give either data or standin, not both")
    if "data" not in run and "standin" not in run:
        raise ConfigError("data", "a data path or a standin block is required")
    standin = run.get("standin")
    if standin is not None:
        if not isinstance(standin, dict):
            raise ConfigError("standin", "must be an object")
        unknown = sorted(set(standin) - {"spec", "n", "seed"})
        if unknown:
            raise ConfigError(f"standin.{unknown[0]}", "unknown field")
        standin = {"spec": resolve(standin.get("spec")), "n": standin.get("n", 2027),
                   "seed": standin.get("seed", 0)}
        if isinstance(standin["n"], bool) or not isinstance(standin["n"], int) or standin["n"] < 1:
            raise ConfigError("standin.n", "must be a positive integer")
    targets = run.get("targets", [])
    if not isinstance(targets, list) or not all(isinstance(t, str) for t in targets):
        raise ConfigError("targets", "must be a list of column names")
    return {"gan": cfg, "schema": run["schema"], "data": run.get("data"), "standin": standin,
            "out": run.get("out", str(base)), "targets": targets}


def _prepare_training(args):
    run = load_run_config(args.config, {"schema": args.schema, "out": args.out, "seed": args.seed})
    schema = TableSchema.load(run["schema"])
    if run["data"] is not None:
        _check_columns(run["data"], schema)
        table = load_csv(run["data"], schema)
    else:
        st = run["standin"]
        full = make_standin_dataset(_standin_spec(st["spec"]), st["n"], np.random.default_rng(st["seed"]))
        table = full[schema.names]
    for t in run["targets"]:
        schema.column(t)
    transforms = fit_transforms(table, schema)
    data = encode(table, transforms)
    model = GanModel.create(run["gan"], transforms, data)
    return run, schema, table, data, model


def cmd_train(args):
    run, schema, table, data, model = _validating(_prepare_training, args)
    cfg = run["gan"]
    out = Path(run["out"])
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.json"

    def log(e):
        extra = "".join(f" {k}={v:.4f}" for k, v in (("ks", e.ks), ("cs", e.cs)) if v is not None)
        print(f"step {e.step} d_loss={e.d_loss:.4f} g_loss={e.g_loss:.4f}{extra}", flush=True)

    eval_pair = (table, schema)
    if cfg.distribution.scope != "none":
        rs = ReplicaSet(model, cfg.distribution)
        trace = run_distributed_training(model, data, cfg, on_log=log, eval_pair=eval_pair,
                                         checkpoint_path=str(ckpt), replicas=rs)
        if not rs.is_mirrored():
            print("error: replicas diverged", file=sys.stderr)
            return EXIT_RUNTIME
    else:
        trace = train(model, data, cfg, on_log=log, eval_pair=eval_pair, checkpoint_path=str(ckpt))
    trace.to_csv(out / "trace.csv")
    trace.timing_to_csv(out / "timing.csv")
    _write_json(out / "run.json", {
        "version": __version__, "config": cfg.to_dict(), "schema": run["schema"], "data": run["data"],
        "standin": run["standin"], "targets": run["targets"], "rows": len(table),
    })
    print(f"wrote {ckpt}, {out / 'trace.csv'}, {out / 'timing.csv'}")
    return EXIT_OK


def cmd_generate(args):
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    model = _validating(load_checkpoint, args.checkpoint)
    rng = np.random.default_rng(args.seed)
    encoded = _validating(generate, model, args.n, condition=args.condition, rng=rng)
    table = decode(encoded, model.transforms)
    write_csv(table, args.out)
    print(f"wrote {len(table)} rows to {args.out}")
    return EXIT_OK


def _parse_targets(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def cmd_evaluate(args):
    schema = _validating(TableSchema.load, args.schema)
    for path in (args.real, args.gen):
        _validating(_check_columns, path, schema)
    real = _validating(load_csv, args.real, schema)
    gen = _validating(load_csv, args.gen, schema)
    targets = _parse_targets(args.targets)
    for t in targets:
        _validating(schema.column, t)
    split = _validating(SplitSpec, args.train_fraction, args.seed)
    report = _validating(full_report, real, gen, schema, targets, split)
    report.config_echo.update({"version": __version__, "real": args.real, "gen": args.gen,
                               "schema": args.schema})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.save(out / "report.json")
    charts = column_charts(real, gen, schema)
    for name, svg in charts.items():
        _write_text(out / name, svg)
    print(f"ks_test={report.ks_test} cs_test={report.cs_test}; wrote report.json and {len(charts)} charts to {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="discgan", description="Tabular GAN training and evaluation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("standin", help="write a stand-in ICU table as CSV")
    s.add_argument("--spec", help="stand-in spec JSON (default: built-in ICU-like spec)")
    s.add_argument("--n", type=int, default=2027)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_standin)

    t = sub.add_parser("train", help="train a GAN from a run config")
    t.add_argument("--config", required=True)
    t.add_argument("--schema", help="override the config's schema path")
    t.add_argument("--out", help="override the output directory")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", help="sample rows from a checkpoint")
    g.add_argument("--checkpoint", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--condition")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="compare generated rows with real rows")
    e.add_argument("--real", required=True)
    e.add_argument("--gen", required=True)
    e.add_argument("--schema", required=True)
    e.add_argument("--targets", default="", help="comma-separated discrete target columns")
    e.add_argument("--train-fraction", type=float, default=0.8)
    e.add_argument("--seed", type=int, default=0, help="seed of the real train/test split")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any failure after validation is a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
