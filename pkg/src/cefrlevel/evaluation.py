"""Ordinal cost metric, confusion matrices, stratified folds, CV and ablations."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import FAMILIES, PipelineConfig
from .corpus import LEVELS, N_LEVELS, Dataset, Level
from .errors import DataError
from .pipeline import fit_pipeline, model_proba, train_model, transform_pipeline
from .util import atomic_write_text, derive_seed

logger = logging.getLogger(__name__)

# rows = true level, columns = predicted level
DEFAULT_COSTS = np.array(
    [
        [0, 1, 2, 3, 4, 6],
        [1, 0, 1, 4, 5, 8],
        [3, 2, 0, 3, 5, 8],
        [10, 7, 5, 0, 2, 7],
        [20, 16, 12, 4, 0, 8],
        [44, 38, 32, 19, 13, 0],
    ],
    dtype=np.float64,
)


def load_cost_matrix(path) -> np.ndarray:
    """Six lines of six numbers, rows are true levels."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(v) for v in line.replace(",", " ").split()])
    cost = np.array(rows, dtype=np.float64)
    validate_cost_matrix(cost)
    return cost


def validate_cost_matrix(cost: np.ndarray) -> None:
    if cost.shape != (N_LEVELS, N_LEVELS):
        raise ValueError(f"cost matrix must be {N_LEVELS}x{N_LEVELS}, got {cost.shape}")
    if (cost < 0).any():
        raise ValueError("cost matrix entries must be non-negative")
    if np.diag(cost).any():
        raise ValueError("cost matrix diagonal must be zero")


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int = N_LEVELS) -> np.ndarray:
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return m


def cost_error(confusion, cost=DEFAULT_COSTS) -> float:
    """E = (100 / n) * sum_ij C_ij N_ij."""
    confusion = np.asarray(confusion)
    n = confusion.sum()
    if n == 0:
        raise ValueError("cost error is undefined for an empty confusion matrix")
    return float(100.0 * (np.asarray(cost, dtype=np.float64) * confusion).sum() / n)


def accuracy(confusion) -> float:
    confusion = np.asarray(confusion)
    n = confusion.sum()
    if n == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(confusion) / n)


def stratified_kfold(labels: Sequence, k: int, seed: int = 0) -> np.ndarray:
    """Fold index per example.

    Within each class, a seeded shuffle followed by round-robin assignment;
    the round-robin continues across classes so fold sizes stay balanced.
    """
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > y.size:
        raise ValueError(f"k={k} exceeds the number of examples ({y.size})")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    cursor = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < k:
            logger.warning("class %s has %d members, fewer than k=%d", c, members.size, k)
        members = members[rng.permutation(members.size)]
        folds[members] = (cursor + np.arange(members.size)) % k
        cursor = (cursor + members.size) % k
    return folds


@dataclass
class FoldRecord:
    fold: int
    n_train: int
    n_valid: int
    error: float
    accuracy: float
    confusion: np.ndarray


@dataclass
class CVResult:
    confusion: np.ndarray
    folds: list
    predictions: dict = field(default_factory=dict)  # essay id -> (level index, probabilities)
    cost: np.ndarray = field(default_factory=lambda: DEFAULT_COSTS.copy())

    @property
    def error(self) -> float:
        return cost_error(self.confusion, self.cost)

    @property
    def accuracy(self) -> float:
        return accuracy(self.confusion)

    @property
    def mean_error(self) -> float:
        return float(np.mean([f.error for f in self.folds]))

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.accuracy for f in self.folds]))


def run_cv(dataset: Dataset, config: PipelineConfig, k: int = 3, seed: int = 0, cost=DEFAULT_COSTS) -> CVResult:
    """Stratified k-fold CV; every fitted component sees only its training split."""
    if not dataset.is_labeled:
        raise DataError("cross-validation needs a fully labeled dataset")
    validate_cost_matrix(np.asarray(cost, dtype=np.float64))
    labels = [int(e.label) for e in dataset]
    folds = stratified_kfold(labels, k, seed)
    pooled = np.zeros((N_LEVELS, N_LEVELS), dtype=np.int64)
    records = []
    predictions = {}
    for f in range(k):
        train_idx = np.flatnonzero(folds != f)
        valid_idx = np.flatnonzero(folds == f)
        train = [dataset[i] for i in train_idx]
        valid = [dataset[i] for i in valid_idx]
        fold_config = _reseed(config, derive_seed(seed, "fold", f))
        try:
            pipeline = fit_pipeline(train, fold_config)
            model = train_model(transform_pipeline(train, pipeline), [e.label for e in train], fold_config)
            proba = model_proba(model, transform_pipeline(valid, pipeline))
        except Exception as exc:
            exc.args = (f"fold {f}: {exc}",)
            raise
        pred = proba.argmax(axis=1)
        conf = confusion_matrix([labels[i] for i in valid_idx], pred)
        pooled += conf
        records.append(FoldRecord(f, len(train), len(valid), cost_error(conf, cost), accuracy(conf), conf))
        for e, p, row in zip(valid, pred, proba):
            predictions[e.id] = (int(p), row)
        logger.info("fold %d: E=%.4f acc=%.4f", f, records[-1].error, records[-1].accuracy)
    return CVResult(pooled, records, predictions, np.asarray(cost, dtype=np.float64))


def _reseed(config: PipelineConfig, seed: int) -> PipelineConfig:
    return dataclasses.replace(config, seed=seed)


@dataclass
class AblationRow:
    name: str
    families: tuple
    error: float
    accuracy: float


def run_ablation(dataset: Dataset, config: PipelineConfig, families: Sequence[str] | None = None,
                 mode: str = "loo", k: int = 3, seed: int = 0) -> list[AblationRow]:
    """Cumulative (add families in order) or leave-one-out ablation.

    Leave-one-out emits the all-families baseline first, then one row per
    removed family.
    """
    families = tuple(FAMILIES if families is None else families)
    if not families:
        raise ValueError("ablation needs at least one family")
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise ValueError(f"unknown feature families: {unknown}")
    rows = []

    def run(name, fams):
        res = run_cv(dataset, config.with_families(fams), k=k, seed=seed)
        rows.append(AblationRow(name, tuple(fams), res.error, res.accuracy))

    if mode == "cumulative":
        for i in range(len(families)):
            run(f"+{families[i]}", families[: i + 1])
    elif mode in ("loo", "leave-one-out"):
        run("all", families)
        for fam in families:
            rest = tuple(f for f in families if f != fam)
            if not rest:
                raise ValueError("cannot remove the only family")
            run(f"-{fam}", rest)
    else:
        raise ValueError(f"unknown ablation mode {mode!r}")
    return rows


# ---------------------------------------------------------------- reports

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def confusion_csv(confusion: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred"] + [l.name for l in LEVELS])
    for lvl, row in zip(LEVELS, confusion):
        w.writerow([lvl.name] + [int(v) for v in row])
    return buf.getvalue()


def write_cv_report(result: CVResult, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write_text(d / "confusion.csv", confusion_csv(result.confusion))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fold", "n_train", "n_valid", "E", "accuracy"])
    for f in result.folds:
        w.writerow([f.fold, f.n_train, f.n_valid, _fmt(f.error), _fmt(f.accuracy)])
    w.writerow(["pooled", "", sum(f.n_valid for f in result.folds), _fmt(result.error), _fmt(result.accuracy)])
    w.writerow(["mean", "", "", _fmt(result.mean_error), _fmt(result.mean_accuracy)])
    atomic_write_text(d / "summary.csv", buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "level"] + [f"p_{l.name}" for l in LEVELS])
    for essay_id in sorted(result.predictions):
        pred, proba = result.predictions[essay_id]
        w.writerow([essay_id, Level(pred).name] + [f"{p:.8f}" for p in proba])
    atomic_write_text(d / "predictions.csv", buf.getvalue())


def write_ablation_report(rows: Sequence[AblationRow], directory, mode: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["features", "E", "accuracy"])
    for r in rows:
        w.writerow([r.name, _fmt(r.error), _fmt(r.accuracy)])
    atomic_write_text(d / f"ablation_{mode}.csv", buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "E", "accuracy"])
    for i, r in enumerate(rows, start=1):
        x = i if mode == "cumulative" else r.name
        w.writerow([x, _fmt(r.error), _fmt(r.accuracy)])
    atomic_write_text(d / f"plot_{mode}.csv", buf.getvalue())


def format_table(rows: Sequence[AblationRow]) -> str:
    width = max(len(r.name) for r in rows)
    lines = [f"{'features'.ljust(width)}  {'E':>8}  {'acc':>6}"]
    lines += [f"{r.name.ljust(width)}  {r.error:8.2f}  {100 * r.accuracy:6.1f}" for r in rows]
    return "\n".join(lines)
