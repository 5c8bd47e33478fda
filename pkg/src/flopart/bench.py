"""Runtime scaling benchmark on synthetic data."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from flopart.dp_engine import fit
from flopart.labels import LabelSet
from flopart.synthetic import generate_synthetic

__all__ = ["BenchRecord", "bench", "loglog_slope", "BENCH_PENALTY"]

BENCH_PENALTY = 10.0


@dataclass(frozen=True)
class BenchRecord:
    n: int
    algorithm: str
    seconds: float
    pieces_max: int


def _peak_count(n: int) -> int:
    # one planted peak per 1000 points keeps label density fixed across sizes
    return max(1, n // 1000)


def bench(sizes: Sequence[int], reps: int = 3, seed: int = 0,
          penalty: float = BENCH_PENALTY) -> List[BenchRecord]:
    """Median fit time per size, with and without labels.

    One warm-up run per size and configuration is discarded.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    records = []
    for n in sizes:
        data, labels = generate_synthetic(n, _peak_count(n), 1.0, 10.0, seed)
        configs = (("FLOPART", labels), ("GFPOP", LabelSet.empty(n)))
        for name, labs in configs:
            fit(data, labs, penalty)
            times, pieces = [], 0
            for _ in range(reps):
                t0 = time.perf_counter()
                result = fit(data, labs, penalty)
                times.append(time.perf_counter() - t0)
                pieces = max(pieces, result.pieces_max)
            records.append(BenchRecord(n, name, statistics.median(times), pieces))
    return records


def loglog_slope(records: Sequence[BenchRecord], algorithm: str = None) -> float:
    """Least-squares slope of log(seconds) against log(n)."""
    rows = [r for r in records if algorithm is None or r.algorithm == algorithm]
    x = np.log([r.n for r in rows])
    y = np.log([max(r.seconds, 1e-9) for r in rows])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
