"""Command-line entry point: train, predict, cv, ablate, synth, score."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from .cache import FeatureCache
from .config import FAMILIES, PipelineConfig
from .corpus import LEVELS, Level, load_dataset
from .errors import DataError, ModelFileError, ResourceError
from .evaluation import (
    DEFAULT_COSTS,
    accuracy,
    confusion_csv,
    confusion_matrix,
    cost_error,
    format_table,
    load_cost_matrix,
    run_ablation,
    run_cv,
    write_ablation_report,
    write_cv_report,
)
from .pipeline import load_model, save_model, train
from .synthetic import write_synthetic
from .util import atomic_write_text

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE = 0, 2, 3, 4

log = logging.getLogger("cefrlevel")


def _config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.set:
        config = config.override(args.set)
    if args.seed is not None:
        config = config.override([f"seed={args.seed}"])
    if args.families:
        config = config.with_families([f.strip() for f in args.families.split(",") if f.strip()])
    return config


def _cache(args):
    return FeatureCache(args.cache) if getattr(args, "cache", None) else None


def cmd_train(args) -> int:
    config = _config(args)
    dataset = load_dataset(args.data)
    if not dataset.is_labeled:
        raise DataError(f"{args.data}: training data must be fully labeled")
    pipeline = train(dataset, config, cache=_cache(args))
    save_model(pipeline, args.out)
    print(f"wrote {args.out} ({len(pipeline.feature_names)} features, fingerprint {pipeline.fingerprint[:12]})")
    return EXIT_OK


def predictions_csv(ids, proba) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "level"] + [f"p_{l.name}" for l in LEVELS])
    for essay_id, row in zip(ids, proba):
        w.writerow([essay_id, Level(int(np.argmax(row))).name] + [f"{p:.8f}" for p in row])
    return buf.getvalue()


def cmd_predict(args) -> int:
    config = PipelineConfig.load(args.config) if args.config else None
    pipeline = load_model(args.model, config)
    dataset = load_dataset(args.data)
    proba = pipeline.predict_proba(dataset.essays) if len(dataset) else np.zeros((0, len(LEVELS)))
    text = predictions_csv(dataset.ids, proba)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cost(args):
    return load_cost_matrix(args.cost) if getattr(args, "cost", None) else DEFAULT_COSTS


def cmd_cv(args) -> int:
    config = _config(args)
    dataset = load_dataset(args.data)
    result = run_cv(dataset, config, k=args.k, seed=config.seed, cost=_cost(args))
    if args.report:
        write_cv_report(result, args.report)
    print(f"E = {result.error:.4f}  accuracy = {result.accuracy:.4f}  ({args.k} folds, n = {len(dataset)})")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = _config(args)
    dataset = load_dataset(args.data)
    families = config.families if not args.order else tuple(args.order.split(","))
    rows = run_ablation(dataset, config, families=families, mode=args.mode, k=args.k, seed=config.seed)
    if args.report:
        write_ablation_report(rows, args.report, args.mode)
    print(format_table(rows))
    return EXIT_OK


def cmd_synth(args) -> int:
    ds = write_synthetic(args.out, n=args.n, seed=args.seed, resources_dir=args.resources)
    print(f"wrote {len(ds)} essays to {args.out}")
    if args.resources:
        _write_synth_config(Path(args.resources))
    return EXIT_OK


def _write_synth_config(directory: Path) -> None:
    config = PipelineConfig.from_dict({
        "resources": {
            "dictionary": "dictionary.txt",
            "easy_words": "easy_words.txt",
            "embeddings": "embeddings.txt",
            "lexicon": "lexicon.tsv",
        },
        "clusters": {"k": 16},
        "topics": {"counts": [5, 10]},
        "model": {"n_rounds": 200},
    })
    config.dump(directory / "config.yaml")


def _read_levels(path, column):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or column not in reader.fieldnames:
            raise DataError(f"{path}: needs columns 'id' and {column!r}")
        out = {}
        for i, row in enumerate(reader, start=2):
            try:
                out[row["id"]] = Level.parse(row[column])
            except ValueError as exc:
                raise DataError(f"{path}, line {i}: {exc}") from None
    return out


def cmd_score(args) -> int:
    pred = _read_levels(args.pred, "level")
    gold = _read_levels(args.gold, "label")
    missing = sorted(set(gold) - set(pred))
    if missing:
        raise DataError(f"{len(missing)} gold ids have no prediction, e.g. {missing[0]!r}")
    ids = sorted(gold)
    conf = confusion_matrix([gold[i] for i in ids], [pred[i] for i in ids])
    print(f"E = {cost_error(conf, _cost(args)):.4f}")
    print(f"accuracy = {accuracy(conf):.5f}")
    print(confusion_csv(conf), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cefrlevel", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def configurable(p):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="global seed (overrides config)")
        p.add_argument("--families", help=f"comma-separated subset of {','.join(FAMILIES)}")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value, e.g. model.n_rounds=200")

    p = sub.add_parser("train", help="fit features and classifier, write a model file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cache", help="directory for cached feature matrices")
    configurable(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write per-essay level and class probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--config", help="check the model against this configuration")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--report", help="directory for confusion/summary/prediction CSVs")
    p.add_argument("--cost", help="6x6 cost matrix file")
    configurable(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ablate", help="cumulative or leave-one-out family ablation")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["cumulative", "loo"], default="loo")
    p.add_argument("--order", help="family order for cumulative mode")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--report", help="directory for ablation and plot CSVs")
    configurable(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--resources", help="also write matching lexical resources and config.yaml here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("score", help="cost-weighted error of a prediction file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--cost", help="6x6 cost matrix file")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DataError, ModelFileError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # bad config values, bad overrides, impossible fold counts
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
