"""Multi-sequence workflows: penalty grids, penalty learning and ROC curves."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from flopart.data import CountSequence, read_coverage
from flopart.dp_engine import fit
from flopart.evaluation import (
    PenaltyModel,
    RocCurve,
    bic_penalty,
    label_errors,
    learn_constant,
    learn_linear,
    penalty_grid,
    roc_analysis,
    target_interval,
    two_fold_split,
)
from flopart.labels import LabelSet, read_labels, validate

__all__ = [
    "LabeledSequence",
    "thread_count",
    "parallel_map",
    "read_manifest",
    "write_manifest",
    "grid_errors",
    "default_constants",
    "PenaltyRocResult",
    "penalty_roc",
]

METHODS = ("bic", "constant", "linear")


@dataclass
class LabeledSequence:
    name: str
    data: CountSequence
    labels: LabelSet


def thread_count() -> int:
    """Worker cap from FLOPART_THREADS, defaulting to the CPU count."""
    env = os.environ.get("FLOPART_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"FLOPART_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Ordered map; threads only help for work that releases the GIL."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def read_manifest(path, format: str = "bedgraph") -> List[LabeledSequence]:
    """Read a ``sequence_id data labels`` TSV; paths are relative to the manifest."""
    path = Path(path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header != ["sequence_id", "data", "labels"]:
            raise ValueError("manifest header must be: sequence_id data labels")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ValueError(f"malformed line {lineno}")
            name, data_path, label_path = rec
            data = read_coverage(path.parent / data_path, format)
            labels = read_labels(path.parent / label_path, data,
                                 index_mode=data.coords is None)
            out.append(LabeledSequence(name, data, labels))
    return out


def write_manifest(rows: Sequence[tuple], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("sequence_id\tdata\tlabels\n")
        for name, data_path, label_path in rows:
            fh.write(f"{name}\t{data_path}\t{label_path}\n")


def grid_errors(data: CountSequence, eval_labels, penalties, constraint_labels=None) -> list:
    """Fit at every penalty and score on ``eval_labels``.

    Returns a list of (penalty, SegmentationResult, LabelErrorReport).
    """
    constraint = constraint_labels if constraint_labels is not None else LabelSet.empty(data.n)

    def one(lam):
        result = fit(data, constraint, lam)
        return lam, result, label_errors(result.peaks, eval_labels)

    return parallel_map(one, [float(p) for p in penalties])


def default_constants() -> np.ndarray:
    return np.linspace(-15.0, 15.0, 61)


@dataclass
class PenaltyRocResult:
    curve: RocCurve
    model: PenaltyModel
    predictions: Dict[str, float]
    skipped: List[str]
    grid: Optional[np.ndarray] = None
    train_errors: Optional[np.ndarray] = None  # (sequences, grid), empty for bic


def _learn(method: str, train_errs: list, grid: np.ndarray, features: list) -> PenaltyModel:
    if method == "bic":
        return PenaltyModel.bic()
    if method == "constant":
        return learn_constant(grid, np.array(train_errs))
    if method == "linear":
        intervals = [target_interval(grid, e) for e in train_errs]
        return learn_linear(features, intervals)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def penalty_roc(corpus: Sequence[LabeledSequence], method: str, seed: int = 0,
                test_fold: int = 1, grid: Optional[np.ndarray] = None,
                constants: Optional[np.ndarray] = None,
                algorithm: str = "flopart") -> PenaltyRocResult:
    """Learn a penalty on train labels and trace a ROC curve on test labels.

    Each sequence's labels are split into two folds with a generator
    seeded by (seed, sequence position). Penalty learning uses unlabeled
    grid fits scored on the train fold. The ROC fits use the train fold as
    constraints when ``algorithm`` is "flopart", no labels for "gfpop".
    Sequences with an empty train or test fold are skipped.
    """
    if test_fold not in (1, 2):
        raise ValueError("test_fold must be 1 or 2")
    if algorithm not in ("flopart", "gfpop"):
        raise ValueError("algorithm must be flopart or gfpop")
    grid = penalty_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    constants = default_constants() if constants is None else np.asarray(constants, dtype=float)

    kept, skipped, train, test = [], [], [], []
    for k, seq in enumerate(corpus):
        folds = two_fold_split(seq.labels, np.random.default_rng([seed, k]))
        tst, trn = folds[test_fold - 1], folds[2 - test_fold]
        if not tst or not trn:
            skipped.append(seq.name)
            continue
        kept.append(seq)
        train.append(validate(trn, seq.data.n))
        test.append(validate(tst, seq.data.n))
    if not kept:
        raise ValueError("no sequence has labels in both folds")

    train_errs, features = [], []
    for seq, trn in zip(kept, train):
        features.append(bic_penalty(seq.data.total_weight))
        if method != "bic":
            train_errs.append([rep.errors for _, _, rep in grid_errors(seq.data, trn, grid)])
    model = _learn(method, train_errs, grid, features)
    predictions = [model.predict(seq.data.total_weight) for seq in kept]

    cache: Dict[tuple, list] = {}

    def supplier(k: int, lam: float) -> list:
        key = (k, lam)
        if key not in cache:
            constraint = train[k] if algorithm == "flopart" else LabelSet.empty(kept[k].data.n)
            cache[key] = fit(kept[k].data, constraint, lam).peaks
        return cache[key]

    # warm the cache in parallel, then score serially in a fixed order
    jobs = [(k, math.exp(f + c)) for c in constants for k, f in enumerate(predictions)]
    for key, peaks in zip(jobs, parallel_map(lambda j: supplier(*j), jobs)):
        cache[key] = peaks
    curve = roc_analysis(predictions, constants, supplier, test)
    return PenaltyRocResult(curve, model,
                            {s.name: f for s, f in zip(kept, predictions)}, skipped,
                            grid, np.array(train_errs, dtype=np.int64).reshape(-1, len(grid)))
