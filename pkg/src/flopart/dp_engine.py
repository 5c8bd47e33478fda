"""Label-constrained up-down Poisson segmentation by functional pruning.

Two cost functions are kept per data point, one for the background state
(0) and one for the peak state (1). Each label changes which update rule
is applied at the points it covers: noPeaks forbids the peak state,
peakStart forces background at its first point and peak at its last point
with one up change in between, and peakEnd is the mirror image. An empty
label set gives the plain up-down constrained model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from flopart import _kernels as K
from flopart.cost_function import CostFunction, add_loss, minimize
from flopart.data import CountSequence
from flopart.labels import (
    LabelCursor,
    LabelContext,
    LabelKind,
    LabelSet,
    Position,
    rule_codes,
    validate,
)

__all__ = [
    "InfeasibleLabelsError",
    "RuleKind",
    "UpdateRule",
    "Segment",
    "SegmentationResult",
    "CostMatrix",
    "get_rule",
    "apply_rule",
    "init_costs",
    "fill_matrix",
    "decode",
    "fit",
    "fit_rules",
    "poisson_loss",
]


class InfeasibleLabelsError(ValueError):
    """Every cost is infinite at some data point."""


class RuleKind(enum.IntEnum):
    UNLABELED = 0
    NO_PEAKS = 1
    PEAK_START_FIRST = 2
    PEAK_START_INTERIOR = 3
    PEAK_START_LAST = 4
    PEAK_END_FIRST = 5
    PEAK_END_INTERIOR = 6
    PEAK_END_LAST = 7


_RULE_OF = {
    (LabelKind.PEAK_START, Position.FIRST): RuleKind.PEAK_START_FIRST,
    (LabelKind.PEAK_START, Position.INTERIOR): RuleKind.PEAK_START_INTERIOR,
    (LabelKind.PEAK_START, Position.LAST): RuleKind.PEAK_START_LAST,
    (LabelKind.PEAK_END, Position.FIRST): RuleKind.PEAK_END_FIRST,
    (LabelKind.PEAK_END, Position.INTERIOR): RuleKind.PEAK_END_INTERIOR,
    (LabelKind.PEAK_END, Position.LAST): RuleKind.PEAK_END_LAST,
}


class UpdateRule(NamedTuple):
    kind: RuleKind
    state: int

    @property
    def mode(self) -> int:
        """0: infinite, 1: stay in the same state only, 2: stay or change."""
        return int(K.RULE_MODES[int(self.kind), self.state])

    @property
    def is_infinite(self) -> bool:
        return self.mode == K.MODE_INFINITE

    def get_cost(self, prev0: CostFunction, prev1: CostFunction, z: float, w: float,
                 lam: float, i: int) -> CostFunction:
        """Cost function for this rule at 1-based index ``i`` (i >= 2)."""
        table = K.step_cost(self.mode, self.state, prev0.table, prev1.table,
                            float(z), float(w), float(lam), float(i - 1))
        return CostFunction(table, prev0.domain)


def get_rule(s: int, context: Optional[LabelContext]) -> UpdateRule:
    if s not in (0, 1):
        raise ValueError("state must be 0 or 1")
    if context is None:
        return UpdateRule(RuleKind.UNLABELED, s)
    if context.kind == LabelKind.NO_PEAKS:
        return UpdateRule(RuleKind.NO_PEAKS, s)
    return UpdateRule(_RULE_OF[(context.kind, context.position)], s)


def apply_rule(rule: UpdateRule, prev0: CostFunction, prev1: CostFunction,
               z: float, w: float, lam: float, i: int) -> CostFunction:
    return rule.get_cost(prev0, prev1, z, w, lam, i)


def poisson_loss(z, mu, w=1.0):
    """Weighted Poisson loss w * (mu - z*log(mu)), with 0*log(0) = 0."""
    z = np.asarray(z, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        zlog = np.where(z == 0, 0.0, z * np.log(mu))
    return np.asarray(w) * (mu - zlog)


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    mean: float
    state: int


@dataclass
class SegmentationResult:
    segments: List[Segment]
    penalty: float
    penalized_cost: float
    pieces_max: int = 0
    states: np.ndarray = field(init=False, repr=False)
    changes: np.ndarray = field(init=False, repr=False)
    means: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.segments[-1].end
        states = np.empty(n, dtype=np.int8)
        means = np.empty(n)
        for seg in self.segments:
            states[seg.start - 1:seg.end] = seg.state
            means[seg.start - 1:seg.end] = seg.mean
        self.states = states
        self.means = means
        self.changes = np.diff(states.astype(np.int8))

    @property
    def n(self) -> int:
        return int(self.states.shape[0])

    @property
    def change_count(self) -> int:
        return len(self.segments) - 1

    @property
    def total_loss(self) -> float:
        return self.penalized_cost - self.penalty * self.change_count

    @property
    def peaks(self) -> List[tuple]:
        out = []
        for seg in self.segments:
            if seg.state != 1:
                continue
            if out and out[-1][1] == seg.start - 1:
                out[-1] = (out[-1][0], seg.end)
            else:
                out.append((seg.start, seg.end))
        return out


class CostMatrix:
    """All 2n cost functions of one run, kept for inspection and decoding."""

    def __init__(self, costs: List[tuple], penalty: float):
        self.costs = costs
        self.penalty = penalty

    def __getitem__(self, key) -> CostFunction:
        s, i = key
        return self.costs[i - 1][s]

    @property
    def n(self) -> int:
        return len(self.costs)


def _domain(data: CountSequence) -> tuple:
    return float(data.values.min()), float(data.values.max())


def init_costs(z1: float, w1: float, rules: tuple, domain: tuple) -> tuple:
    """Costs at index 1: the bare loss, or infinite where the rule forbids the state."""
    base = add_loss(CostFunction.zero(*domain), z1, w1)
    inf = CostFunction.infinite(*domain)
    return tuple(inf if rule.is_infinite else base for rule in rules)


def _as_labelset(labels, n: int) -> LabelSet:
    if labels is None:
        return LabelSet.empty(n)
    if isinstance(labels, LabelSet) and labels.n == n:
        return labels
    return validate(labels, n)


def _rules_from_codes(codes: np.ndarray, i: int) -> tuple:
    kind = RuleKind(int(codes[i - 1]))
    return UpdateRule(kind, 0), UpdateRule(kind, 1)


def fill_matrix(data: CountSequence, labels=None, penalty: float = 0.0,
                codes: Optional[np.ndarray] = None) -> CostMatrix:
    """Run the update rules point by point in Python and keep every function.

    Slower than :func:`fit`, which stores only what decoding needs.
    """
    labels = _as_labelset(labels, data.n)
    lo, hi = _domain(data)
    if not hi > lo:
        raise ValueError("constant data has a degenerate mean domain; use fit()")
    cursor = LabelCursor(labels)
    z, w = data.values, data.weights
    costs = []
    for i in range(1, data.n + 1):
        if codes is None:
            ctx = cursor.get_label(i)
            rules = (get_rule(0, ctx), get_rule(1, ctx))
        else:
            rules = _rules_from_codes(codes, i)
        if i == 1:
            pair = init_costs(z[0], w[0], rules, (lo, hi))
        else:
            prev0, prev1 = costs[-1]
            pair = tuple(apply_rule(r, prev0, prev1, z[i - 1], w[i - 1], penalty, i)
                         for r in rules)
        if pair[0].is_infinite and pair[1].is_infinite:
            raise InfeasibleLabelsError(f"infeasible label configuration at index {i}")
        costs.append(pair)
    return CostMatrix(costs, float(penalty))


def decode(matrix: CostMatrix) -> SegmentationResult:
    """Walk the backtrace from the best final cost to index 1."""
    final = [matrix[s, matrix.n] for s in (0, 1)]
    best = None
    for s, C in enumerate(final):
        if C.is_infinite:
            continue
        mu, cost, _ = minimize(C)
        if best is None or cost < best[2]:
            best = (s, mu, cost)
    if best is None:
        raise InfeasibleLabelsError("infeasible label configuration")
    s, mu, cost = best
    i = matrix.n
    segments = []
    while True:
        piece = matrix[s, i].pieces[matrix[s, i].piece_at(mu)]
        start = 1 if piece.prev_end is None else piece.prev_end + 1
        segments.append(Segment(start, i, mu, s))
        if piece.prev_end is None:
            break
        if piece.prev_mean is not None:
            mu = piece.prev_mean
        s, i = piece.prev_state, piece.prev_end
    segments.reverse()
    return SegmentationResult(segments, matrix.penalty, cost)


def _fit_constant(data: CountSequence, codes: np.ndarray, penalty: float) -> SegmentationResult:
    # All values equal: every segment mean is that value, so only the state
    # path is optimized, by a scalar version of the same update rules.
    n = data.n
    value = float(data.values[0])
    loss = poisson_loss(data.values, value, data.weights)
    inf = math.inf
    cost = np.full((n, 2), inf)
    back = np.zeros((n, 2), dtype=np.int8)  # 1 when reached by a change
    for s in (0, 1):
        if K.RULE_MODES[codes[0], s] != K.MODE_INFINITE:
            cost[0, s] = loss[0]
    for i in range(1, n):
        for s in (0, 1):
            mode = K.RULE_MODES[codes[i], s]
            if mode == K.MODE_INFINITE:
                continue
            best, moved = cost[i - 1, s], 0
            if mode == K.MODE_STAY_OR_CHANGE and cost[i - 1, 1 - s] + penalty < best:
                best, moved = cost[i - 1, 1 - s] + penalty, 1
            cost[i, s] = best + loss[i]
            back[i, s] = moved
        if cost[i, 0] == inf and cost[i, 1] == inf:
            raise InfeasibleLabelsError(f"infeasible label configuration at index {i + 1}")
    s = 0 if cost[-1, 0] <= cost[-1, 1] else 1
    total = float(cost[-1, s])
    segments = []
    end = n
    for i in range(n - 1, 0, -1):
        if back[i, s]:
            segments.append(Segment(i + 1, end, value, s))
            end = i
            s = 1 - s
    segments.append(Segment(1, end, value, s))
    segments.reverse()
    return SegmentationResult(segments, float(penalty), total)


def fit_rules(data: CountSequence, codes: np.ndarray, penalty: float) -> SegmentationResult:
    """Fit with an explicit per-index rule code array (see :func:`labels.rule_codes`)."""
    if penalty < 0 or not math.isfinite(penalty):
        raise ValueError("penalty must be finite and non-negative")
    codes = np.ascontiguousarray(codes, dtype=np.int8)
    if codes.shape != (data.n,):
        raise ValueError("need one rule code per data point")
    lo, hi = _domain(data)
    if not hi > lo:
        return _fit_constant(data, codes, float(penalty))
    status, cost, starts, ends, means, states, pieces_max = K.fit_kernel(
        data.values, data.weights, codes, float(penalty), lo, hi
    )
    if status >= 0:
        raise InfeasibleLabelsError(f"infeasible label configuration at index {status}")
    segments = [
        Segment(int(a), int(b), float(m), int(s))
        for a, b, m, s in zip(starts, ends, means, states)
    ]
    return SegmentationResult(segments, float(penalty), float(cost), int(pieces_max))


def fit(data: CountSequence, labels=None, penalty: float = 0.0) -> SegmentationResult:
    """Optimal label-consistent up-down segmentation.

    Args:
        data: the count sequence.
        labels: a LabelSet, a list of Label, or None for no labels.
        penalty: non-negative cost charged per change (up or down).

    Raises:
        LabelError: labels fail validation.
        InfeasibleLabelsError: no segmentation satisfies the labels.
    """
    labels = _as_labelset(labels, data.n)
    return fit_rules(data, rule_codes(labels), penalty)
