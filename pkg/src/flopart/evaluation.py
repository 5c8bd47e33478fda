"""Label errors, penalty selection and ROC analysis."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from flopart.labels import Label, LabelKind, LabelSet

__all__ = [
    "Outcome",
    "LabelErrorReport",
    "PenaltyModel",
    "RocCurve",
    "extract_peaks",
    "label_errors",
    "label_errors_genomic",
    "bic_penalty",
    "penalty_grid",
    "parse_penalty_grid",
    "learn_constant",
    "target_interval",
    "learn_linear",
    "squared_hinge_loss",
    "roc_analysis",
    "auc",
    "two_fold_split",
]


class Outcome(str, enum.Enum):
    CORRECT = "correct"
    FALSE_POSITIVE = "false_positive"
    FALSE_NEGATIVE = "false_negative"


@dataclass
class LabelErrorReport:
    outcomes: List[Outcome]
    labels: Sequence[Label] = field(default_factory=list, repr=False)

    @property
    def fp(self) -> int:
        return sum(o is Outcome.FALSE_POSITIVE for o in self.outcomes)

    @property
    def fn(self) -> int:
        return sum(o is Outcome.FALSE_NEGATIVE for o in self.outcomes)

    @property
    def errors(self) -> int:
        return self.fp + self.fn

    @property
    def possible_fp(self) -> int:
        return len(self.outcomes)

    @property
    def possible_fn(self) -> int:
        return sum(lab.kind != LabelKind.NO_PEAKS for lab in self.labels)


def extract_peaks(states) -> List[tuple]:
    """Maximal runs of state 1 as 1-based closed (start, end) intervals."""
    s = np.asarray(states, dtype=np.int8)
    if s.size == 0:
        return []
    padded = np.concatenate(([0], s, [0]))
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def _outcome(kind: LabelKind, overlaps: bool, starts: int, ends: int) -> Outcome:
    if kind == LabelKind.NO_PEAKS:
        return Outcome.FALSE_POSITIVE if overlaps else Outcome.CORRECT
    count = starts if kind == LabelKind.PEAK_START else ends
    if count == 0:
        return Outcome.FALSE_NEGATIVE
    if count == 1:
        return Outcome.CORRECT
    return Outcome.FALSE_POSITIVE


def label_errors(peaks: Sequence[tuple], labels) -> LabelErrorReport:
    """Score index-space peaks against labels.

    noPeaks: any overlapping peak is a false positive. peakStart: zero
    peak starts inside the label is a false negative, more than one a false
    positive. peakEnd: the same with peak ends.
    """
    labs = list(labels)
    pk_starts = np.array([p[0] for p in peaks], dtype=np.int64)
    pk_ends = np.array([p[1] for p in peaks], dtype=np.int64)
    outcomes = []
    for lab in labs:
        overlaps = bool(np.any((pk_starts <= lab.hi) & (pk_ends >= lab.lo)))
        n_starts = int(np.sum((pk_starts >= lab.lo) & (pk_starts <= lab.hi)))
        n_ends = int(np.sum((pk_ends >= lab.lo) & (pk_ends <= lab.hi)))
        outcomes.append(_outcome(lab.kind, overlaps, n_starts, n_ends))
    return LabelErrorReport(outcomes, labs)


def label_errors_genomic(peaks: Sequence[tuple], regions: Sequence[tuple]) -> LabelErrorReport:
    """Score half-open genomic peaks [start, end) against (chrom, start, end, kind) regions.

    A peak start counts for a region when it lies in [start, end); a peak
    end when it lies in (start, end].
    """
    pk_starts = np.array([p[0] for p in peaks], dtype=np.int64)
    pk_ends = np.array([p[1] for p in peaks], dtype=np.int64)
    outcomes, labs = [], []
    for chrom, start, end, kind in regions:
        kind = LabelKind(kind)
        overlaps = bool(np.any((pk_starts < end) & (pk_ends > start)))
        n_starts = int(np.sum((pk_starts >= start) & (pk_starts < end)))
        n_ends = int(np.sum((pk_ends > start) & (pk_ends <= end)))
        outcomes.append(_outcome(kind, overlaps, n_starts, n_ends))
        labs.append(Label(1, 2, kind, (chrom, start, end)))
    return LabelErrorReport(outcomes, labs)


def bic_penalty(N: float) -> float:
    """Log penalty log(log(N)) for total weight N, i.e. penalty = log N."""
    if not N >= 2:
        raise ValueError(f"BIC penalty needs N >= 2, got {N}")
    return math.log(math.log(N))


def penalty_grid(lo: float = 1e-5, hi: float = 1e6, count: int = 23) -> np.ndarray:
    """Penalties evenly spaced on the log scale, endpoints included."""
    if count < 1 or not (0 < lo <= hi):
        raise ValueError("bad penalty grid")
    if count == 1:
        return np.array([lo])
    return np.logspace(math.log10(lo), math.log10(hi), count)


def parse_penalty_grid(text: str) -> np.ndarray:
    """Parse ``LO:HI:COUNTlog``, e.g. ``1e-5:1e6:23log``."""
    try:
        lo, hi, count = text.split(":")
        if not count.endswith("log"):
            raise ValueError
        return penalty_grid(float(lo), float(hi), int(count[:-3]))
    except ValueError:
        raise ValueError(f"penalty grid must look like LO:HI:COUNTlog, got {text!r}") from None


@dataclass(frozen=True)
class PenaltyModel:
    """Predicts log(penalty) from the feature x = log(log(N))."""

    kind: str
    log_lambda: Optional[float] = None
    weight: Optional[float] = None
    bias: Optional[float] = None

    @staticmethod
    def feature(N: float) -> float:
        return bic_penalty(N)

    def predict(self, N: float) -> float:
        x = self.feature(N)
        if self.kind == "bic":
            return x
        if self.kind == "constant":
            return float(self.log_lambda)
        if self.kind == "linear":
            return float(self.weight * x + self.bias)
        raise ValueError(f"unknown penalty model {self.kind!r}")

    @classmethod
    def bic(cls) -> "PenaltyModel":
        return cls("bic")


def learn_constant(grid: Sequence[float], errors) -> PenaltyModel:
    """Grid penalty with the fewest total train errors; ties go to the larger penalty.

    Args:
        grid: penalties, shared by every training sequence.
        errors: total errors per grid point, or an array (sequences, grid).
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty penalty grid")
    err = np.asarray(errors, dtype=np.float64)
    if err.ndim == 2:
        err = err.sum(axis=0)
    if err.shape != grid.shape:
        raise ValueError("errors must align with the grid")
    best = err.min()
    candidates = np.flatnonzero(err == best)
    j = candidates[np.argmax(grid[candidates])]
    return PenaltyModel("constant", log_lambda=float(math.log(grid[j])))


def target_interval(grid: Sequence[float], errors: Sequence[float]) -> tuple:
    """Log-penalty interval of the longest run of minimal error.

    Bounds touching the ends of the grid are open (infinite).
    """
    grid = np.asarray(grid, dtype=np.float64)
    err = np.asarray(errors, dtype=np.float64)
    is_min = err == err.min()
    best_len, best = 0, (0, 0)
    j = 0
    while j < len(err):
        if is_min[j]:
            k = j
            while k + 1 < len(err) and is_min[k + 1]:
                k += 1
            if k - j + 1 > best_len:
                best_len, best = k - j + 1, (j, k)
            j = k + 1
        else:
            j += 1
    a, b = best
    lo = -math.inf if a == 0 else math.log(grid[a])
    hi = math.inf if b == len(grid) - 1 else math.log(grid[b])
    return lo, hi


def squared_hinge_loss(pred, lo, hi, margin: float = 1.0) -> float:
    """Sum of squared hinge losses; infinite bounds contribute nothing."""
    pred, lo, hi = (np.asarray(v, dtype=np.float64) for v in (pred, lo, hi))
    with np.errstate(invalid="ignore"):
        lower = np.where(np.isfinite(lo), np.maximum(0.0, lo - pred + margin), 0.0)
        upper = np.where(np.isfinite(hi), np.maximum(0.0, pred - hi + margin), 0.0)
    return float(np.sum(lower**2 + upper**2))


def learn_linear(features, intervals, step: float = 0.02, max_iter: int = 2000,
                 tol: float = 1e-9, margin: float = 1.0) -> PenaltyModel:
    """Fit log(penalty) = w*x + b by gradient descent on the squared hinge loss.

    The descent runs on the mean loss over sequences, which has the same
    minimizer as the sum but a step size that does not depend on the
    number of sequences. The step is halved whenever it fails to decrease
    the objective.
    """
    x = np.asarray(features, dtype=np.float64)
    iv = np.asarray(intervals, dtype=np.float64).reshape(-1, 2)
    lo, hi = iv[:, 0], iv[:, 1]
    if x.shape[0] != iv.shape[0] or x.size == 0:
        raise ValueError("need one interval per feature")
    has_lo, has_hi = np.isfinite(lo), np.isfinite(hi)
    if not (has_lo.any() or has_hi.any()):
        raise ValueError("unconstrained problem")
    lo_f = np.where(has_lo, lo, 0.0)
    hi_f = np.where(has_hi, hi, 0.0)
    m = x.shape[0]

    def objective(w, b):
        return squared_hinge_loss(w * x + b, lo, hi, margin) / m

    # start from the constant that is central among the finite bounds
    finite = np.concatenate([lo[has_lo] + margin, hi[has_hi] - margin])
    w, b = 0.0, float(np.median(finite))
    obj = objective(w, b)
    lr = step
    for _ in range(max_iter):
        f = w * x + b
        g_lower = np.where(has_lo, -2.0 * np.maximum(0.0, lo_f - f + margin), 0.0)
        g_upper = np.where(has_hi, 2.0 * np.maximum(0.0, f - hi_f + margin), 0.0)
        g = (g_lower + g_upper) / m
        gw, gb = float(np.sum(g * x)), float(np.sum(g))
        while True:
            w_new, b_new = w - lr * gw, b - lr * gb
            new = objective(w_new, b_new)
            if new <= obj or lr < 1e-12:
                break
            lr *= 0.5
        improvement = obj - new
        w, b, obj = w_new, b_new, new
        if improvement < tol:
            break
    return PenaltyModel("linear", weight=w, bias=b)


def auc(points: Sequence[tuple]) -> float:
    """Trapezoid area under (fpr, tpr) points; endpoints are added."""
    pts = sorted({(0.0, 0.0), (1.0, 1.0), *((float(a), float(b)) for a, b in points)})
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


@dataclass
class RocCurve:
    """ROC points (fpr, tpr, c), sorted by fpr, endpoints included."""

    points: List[tuple]
    auc: float
    rows: List[dict] = field(default_factory=list, repr=False)


def roc_analysis(predictions: Sequence[float], constants: Sequence[float],
                 supplier: Callable[[int, float], Sequence[tuple]],
                 test_labels: Sequence) -> RocCurve:
    """ROC curve over offsets c added to predicted log penalties.

    Args:
        predictions: predicted log penalty per test sequence.
        constants: offsets c.
        supplier: ``supplier(k, penalty)`` returns the peaks predicted for
            sequence k at that penalty.
        test_labels: labels used for scoring, per sequence.
    """
    possible_fp = sum(len(list(labs)) for labs in test_labels)
    possible_fn = sum(lab.kind != LabelKind.NO_PEAKS for labs in test_labels for lab in labs)
    if possible_fn == 0:
        raise ValueError("no positive labels")
    rows = []
    for c in constants:
        fp = fn = 0
        for k, (f, labs) in enumerate(zip(predictions, test_labels)):
            report = label_errors(supplier(k, math.exp(f + c)), labs)
            fp += report.fp
            fn += report.fn
        rows.append({"c": float(c), "fp": fp, "fn": fn,
                     "fpr": fp / possible_fp, "tpr": 1.0 - fn / possible_fn})
    pts = [(r["fpr"], r["tpr"], r["c"]) for r in rows]
    pts += [(0.0, 0.0, math.inf), (1.0, 1.0, -math.inf)]
    pts.sort(key=lambda p: (p[0], p[1], -p[2]))
    return RocCurve(pts, auc([(a, b) for a, b, _ in pts]), rows)


def two_fold_split(labels: LabelSet, rng: np.random.Generator) -> tuple:
    """Randomly assign each label to fold 1 or 2.

    Returns (fold1 labels, fold2 labels) as lists in label order.
    """
    folds = rng.integers(1, 3, size=len(labels))
    one = [lab for lab, f in zip(labels, folds) if f == 1]
    two = [lab for lab, f in zip(labels, folds) if f == 2]
    return one, two
