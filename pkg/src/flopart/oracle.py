"""Exhaustive solver for tiny instances.

Enumerates every starting state and changepoint set, keeps those that
satisfy the labels, and fits each by trying every subset of active
(equality) mean constraints. Meant to be obviously correct, not fast.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np

from flopart.data import CountSequence
from flopart.labels import LabelKind, LabelSet

__all__ = [
    "OracleError",
    "CandidateModel",
    "MAX_N",
    "pooled_fit",
    "enumerate_models",
    "oracle_solve",
    "oracle_solve_many",
]

MAX_N = 12
FEAS_TOL = 1e-12


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateModel:
    """A fitted structure.

    ``boundaries`` are the 1-based gaps g (between points g and g+1) that
    carry a change; ``active_set`` is the subset fitted with equal means.
    """

    boundaries: tuple
    states: tuple
    active_set: tuple
    means: tuple
    feasible: bool
    loss: float

    @property
    def change_count(self) -> int:
        return len(self.boundaries)

    def penalized_cost(self, penalty: float) -> float:
        return self.loss + penalty * self.change_count


def _block_loss(z: np.ndarray, w: np.ndarray) -> tuple:
    W = float(w.sum())
    S = float((w * z).sum())
    mean = S / W
    if S == 0.0:
        return mean, 0.0
    return mean, S - S * math.log(mean)


def pooled_fit(data: CountSequence, segments: Sequence[tuple], active_set) -> tuple:
    """Fit segment means with some adjacent pairs forced equal.

    Args:
        segments: (start, end) 1-based inclusive, tiling 1..n in order.
        active_set: indices k such that segment k and k+1 share a mean.

    Returns:
        (per-segment means, total Poisson loss).
    """
    z, w = data.values, data.weights
    active = set(active_set)
    means: List[float] = []
    total = 0.0
    k = 0
    while k < len(segments):
        first = k
        while k in active:
            k += 1
        start, end = segments[first][0], segments[k][1]
        mean, loss = _block_loss(z[start - 1:end], w[start - 1:end])
        means.extend([mean] * (k - first + 1))
        total += loss
        k += 1
    return means, total


def _labels_ok(states: Sequence[int], changed: Sequence[bool], labels: LabelSet) -> bool:
    # changed[g-1] is True when gap g (points g, g+1) carries a change
    for lab in labels:
        lo, hi = lab.lo, lab.hi
        if lab.kind == LabelKind.NO_PEAKS:
            if any(states[i - 1] for i in range(lo, hi + 1)):
                return False
            continue
        inside = sum(changed[g - 1] for g in range(lo, hi))
        if inside != 1:
            return False
        first, last = (0, 1) if lab.kind == LabelKind.PEAK_START else (1, 0)
        if states[lo - 1] != first or states[hi - 1] != last:
            return False
    return True


def enumerate_models(data: CountSequence, labels: LabelSet) -> Iterator[CandidateModel]:
    """Yield every label-consistent structure with every feasible active set."""
    n = data.n
    if n > MAX_N:
        raise OracleError(f"instance too large: n={n} > {MAX_N}")
    for start_state in (0, 1):
        for changed in itertools.product((False, True), repeat=n - 1):
            states = [start_state]
            for c in changed:
                states.append(1 - states[-1] if c else states[-1])
            if not _labels_ok(states, changed, labels):
                continue
            boundaries = tuple(g + 1 for g, c in enumerate(changed) if c)
            edges = (0,) + boundaries + (n,)
            segments = [(edges[k] + 1, edges[k + 1]) for k in range(len(edges) - 1)]
            seg_states = [states[a - 1] for a, _ in segments]
            for r in range(len(boundaries) + 1):
                for active in itertools.combinations(range(len(boundaries)), r):
                    means, loss = pooled_fit(data, segments, active)
                    feasible = True
                    for k in range(len(segments) - 1):
                        if k in active:
                            continue
                        up = seg_states[k] == 0
                        lower, upper = (means[k], means[k + 1]) if up else (means[k + 1], means[k])
                        if lower > upper + FEAS_TOL * max(1.0, abs(upper)):
                            feasible = False
                            break
                    if feasible:
                        yield CandidateModel(boundaries, tuple(states), active,
                                             tuple(means), True, loss)


def oracle_solve_many(data: CountSequence, labels: LabelSet, penalties) -> list:
    """Optimal (cost, model) for each penalty from a single enumeration."""
    penalties = [float(p) for p in penalties]
    best = [None] * len(penalties)
    for model in enumerate_models(data, labels):
        for j, lam in enumerate(penalties):
            cost = model.penalized_cost(lam)
            if best[j] is None or cost < best[j][0]:
                best[j] = (cost, model)
    if best and best[0] is None:
        raise OracleError("no feasible model")
    return best


def oracle_solve(data: CountSequence, labels: LabelSet, penalty: float) -> tuple:
    """Exact optimum (cost, CandidateModel) for n <= 12."""
    return oracle_solve_many(data, labels, [penalty])[0]
