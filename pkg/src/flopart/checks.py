"""Randomized agreement checks between the DP and the exhaustive oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from flopart.data import CountSequence
from flopart.dp_engine import SegmentationResult, fit, poisson_loss
from flopart.labels import Label, LabelKind, LabelSet, validate
from flopart.oracle import oracle_solve_many

__all__ = [
    "random_labels",
    "random_instance",
    "recomputed_cost",
    "constraint_violations",
    "OracleSummary",
    "oracle_check",
]

DEFAULT_LAMBDAS = (0.0, 0.5, 2.0, 10.0)


def random_labels(n: int, rng: np.random.Generator, density: float = 0.4) -> LabelSet:
    """Random valid labels of width 2-4 with strict gaps between them."""
    labels = []
    i = 1
    while i < n:
        if rng.random() < density:
            width = int(rng.integers(2, 5))
            if i + width - 1 <= n:
                kind = LabelKind(int(rng.choice([0, 1, -1])))
                labels.append(Label(i, i + width - 1, kind))
            i += width + 1
        else:
            i += 1
    return validate(labels, n)


def random_instance(rng: np.random.Generator, n_max: int = 10, mean: float = 3.0,
                    p_unlabeled: float = 0.2) -> tuple:
    """(data, labels) with n uniform on 1..n_max and Poisson(mean) values."""
    n = int(rng.integers(1, n_max + 1))
    data = CountSequence.from_counts(rng.poisson(mean, n))
    if rng.random() < p_unlabeled:
        return data, LabelSet.empty(n)
    return data, random_labels(n, rng)


def recomputed_cost(data: CountSequence, result: SegmentationResult) -> float:
    """Sum of weighted losses at the decoded means plus penalty per change."""
    loss = float(np.sum(poisson_loss(data.values, result.means, data.weights)))
    return loss + result.penalty * result.change_count


def constraint_violations(result: SegmentationResult, labels: LabelSet,
                          tol: float = 1e-9) -> List[str]:
    """Check alternation, mean ordering at changes, and the label constraints."""
    out = []
    segs = result.segments
    for a, b in zip(segs, segs[1:]):
        if a.state == b.state:
            out.append(f"no state flip at {b.start}")
        up = a.state == 0
        slack = tol * max(1.0, abs(a.mean), abs(b.mean))
        if up and a.mean > b.mean + slack:
            out.append(f"up change at {b.start} decreases the mean")
        if not up and a.mean < b.mean - slack:
            out.append(f"down change at {b.start} increases the mean")
    s = result.states
    c = result.changes
    for lab in labels:
        lo, hi = lab.lo, lab.hi
        if lab.kind == LabelKind.NO_PEAKS:
            if np.any(s[lo - 1:hi]):
                out.append(f"peak state inside noPeaks [{lo}, {hi}]")
            continue
        inside = c[lo - 1:hi - 1]
        if int(np.sum(inside == int(lab.kind))) != 1 or int(np.sum(inside != 0)) != 1:
            out.append(f"{lab.kind.file_name} [{lo}, {hi}] does not hold exactly one change")
    return out


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


@dataclass
class OracleSummary:
    trials: int
    agree: int = 0
    fits: int = 0
    failures: List[str] = field(default_factory=list)


def oracle_check(trials: int = 500, n_max: int = 10, seed: int = 1,
                 lambdas: Sequence[float] = DEFAULT_LAMBDAS, rtol: float = 1e-8) -> OracleSummary:
    """Count trials where the DP matches the oracle at every penalty."""
    rng = np.random.default_rng(seed)
    summary = OracleSummary(trials)
    for t in range(trials):
        data, labels = random_instance(rng, n_max)
        best = oracle_solve_many(data, labels, lambdas)
        ok = True
        for lam, (cost, _) in zip(lambdas, best):
            result = fit(data, labels, lam)
            summary.fits += 1
            problems = constraint_violations(result, labels)
            if _rel(result.penalized_cost, cost) > rtol or problems:
                ok = False
                summary.failures.append(
                    f"trial {t}: n={data.n} lambda={lam} dp={result.penalized_cost!r} "
                    f"oracle={cost!r} {'; '.join(problems)}"
                )
        summary.agree += ok
    return summary
