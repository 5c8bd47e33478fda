"""Weighted count sequences and coverage file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["CountSequence", "DataFormatError", "read_coverage", "write_coverage"]


class DataFormatError(ValueError):
    """Malformed or inconsistent coverage input."""


@dataclass(frozen=True, eq=False)
class CountSequence:
    """Non-negative values with positive weights and optional coordinates.

    ``coords`` is ``(chrom, starts, ends)`` with half-open intervals on a
    single chromosome, sorted and non-overlapping.
    """

    values: np.ndarray
    weights: np.ndarray
    coords: Optional[tuple] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if values.ndim != 1 or values.shape != weights.shape:
            raise DataFormatError("values and weights must be 1-d and the same length")
        if values.size == 0:
            raise DataFormatError("sequence is empty")
        if not np.all(np.isfinite(values)):
            raise DataFormatError("values must be finite")
        if np.any(values < 0):
            raise DataFormatError("negative count")
        if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
            raise DataFormatError("weights must be positive and finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        if self.coords is not None:
            chrom, starts, ends = self.coords
            starts = np.asarray(starts, dtype=np.int64)
            ends = np.asarray(ends, dtype=np.int64)
            if starts.shape != values.shape or ends.shape != values.shape:
                raise DataFormatError("coordinates must match the number of values")
            if np.any(ends <= starts):
                raise DataFormatError("zero-width interval")
            if np.any(starts[1:] < ends[:-1]):
                raise DataFormatError("unsorted intervals")
            object.__setattr__(self, "coords", (str(chrom), starts, ends))

    @classmethod
    def from_counts(cls, values, weights=None) -> "CountSequence":
        values = np.asarray(values, dtype=np.float64)
        if weights is None:
            weights = np.ones_like(values)
        return cls(values, weights)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def chrom(self) -> Optional[str]:
        return None if self.coords is None else self.coords[0]

    @property
    def starts(self) -> Optional[np.ndarray]:
        return None if self.coords is None else self.coords[1]

    @property
    def ends(self) -> Optional[np.ndarray]:
        return None if self.coords is None else self.coords[2]


def _skip(line: str) -> bool:
    s = line.strip()
    return not s or s.startswith("#") or s.startswith("track") or s.startswith("browser")


def _read_bedgraph(path) -> CountSequence:
    chrom = None
    starts, ends, values = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if _skip(line):
                continue
            fields = line.split()
            if len(fields) != 4:
                raise DataFormatError(f"malformed line {lineno}")
            try:
                start, end = int(fields[1]), int(fields[2])
                value = float(fields[3])
            except ValueError:
                raise DataFormatError(f"malformed line {lineno}") from None
            if end <= start or start < 0:
                raise DataFormatError(f"malformed line {lineno}")
            if value < 0:
                raise DataFormatError(f"negative count on line {lineno}")
            if chrom is None:
                chrom = fields[0]
            elif fields[0] != chrom:
                raise DataFormatError(
                    f"malformed line {lineno}: multiple chromosomes in one coverage file"
                )
            if ends and start < ends[-1]:
                raise DataFormatError(f"unsorted intervals at line {lineno}")
            starts.append(start)
            ends.append(end)
            values.append(value)
    if not values:
        raise DataFormatError("no data lines")
    starts = np.array(starts, dtype=np.int64)
    ends = np.array(ends, dtype=np.int64)
    return CountSequence(np.array(values), (ends - starts).astype(np.float64), (chrom, starts, ends))


def _read_counts(path) -> CountSequence:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if _skip(line):
                continue
            fields = line.split()
            if len(fields) != 1:
                raise DataFormatError(f"malformed line {lineno}")
            try:
                value = float(fields[0])
            except ValueError:
                raise DataFormatError(f"malformed line {lineno}") from None
            if value != value or value in (float("inf"), float("-inf")):
                raise DataFormatError(f"malformed line {lineno}")
            if value < 0:
                raise DataFormatError(f"negative count on line {lineno}")
            values.append(value)
    if not values:
        raise DataFormatError("no data lines")
    return CountSequence.from_counts(values)


def read_coverage(path, format: str = "bedgraph") -> CountSequence:
    """Read a coverage file.

    ``bedgraph``: ``chrom start end count`` per line, weight = end - start.
    ``counts``: one value per line, unit weights, no coordinates.
    """
    if format == "bedgraph":
        return _read_bedgraph(path)
    if format == "counts":
        return _read_counts(path)
    raise ValueError(f"unknown coverage format {format!r}")


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_coverage(data: CountSequence, path, format: Optional[str] = None) -> None:
    """Write bedGraph when coordinates exist (or are requested), else counts."""
    if format is None:
        format = "bedgraph" if data.coords is not None else "counts"
    with open(path, "w") as fh:
        if format == "bedgraph":
            if data.coords is None:
                raise DataFormatError("bedgraph output needs coordinates")
            for s, e, v in zip(data.starts, data.ends, data.values):
                fh.write(f"{data.chrom}\t{s}\t{e}\t{_fmt(v)}\n")
        elif format == "counts":
            for v in data.values:
                fh.write(_fmt(v) + "\n")
        else:
            raise ValueError(f"unknown coverage format {format!r}")
