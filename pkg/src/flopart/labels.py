"""Expert labels: validation, genomic-to-index mapping and per-index lookup."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "LabelKind",
    "Position",
    "Label",
    "LabelSet",
    "LabelError",
    "LabelContext",
    "LabelCursor",
    "validate",
    "get_label",
    "map_genomic_to_indices",
    "read_labels",
    "write_labels",
    "rule_codes",
]


class LabelError(ValueError):
    """A label set that cannot be used as a constraint."""


class LabelKind(enum.IntEnum):
    NO_PEAKS = 0
    PEAK_START = 1
    PEAK_END = -1

    @property
    def file_name(self) -> str:
        return _KIND_NAMES[self]

    @classmethod
    def parse(cls, text: str) -> "LabelKind":
        try:
            return _KIND_BY_NAME[text.strip()]
        except KeyError:
            raise LabelError(f"unknown label type {text!r}") from None


_KIND_NAMES = {
    LabelKind.NO_PEAKS: "noPeaks",
    LabelKind.PEAK_START: "peakStart",
    LabelKind.PEAK_END: "peakEnd",
}
_KIND_BY_NAME = {v: k for k, v in _KIND_NAMES.items()}


class Position(enum.IntEnum):
    FIRST = 0
    INTERIOR = 1
    LAST = 2


@dataclass(frozen=True)
class Label:
    """A labeled region of data indices, 1-based and inclusive."""

    lo: int
    hi: int
    kind: LabelKind
    source_region: Optional[tuple] = None


@dataclass(frozen=True)
class LabelSet:
    labels: tuple
    n: int

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, j):
        return self.labels[j]

    @classmethod
    def empty(cls, n: int) -> "LabelSet":
        return cls((), n)


def validate(labels: Iterable[Label], n: int) -> LabelSet:
    """Sort and check labels against a sequence of length n.

    Raises:
        LabelError: a label spans fewer than two points, falls outside
            1..n, or overlaps/touches its neighbour.
    """
    if isinstance(labels, LabelSet):
        labels = labels.labels
    items = []
    for lab in labels:
        lab = Label(int(lab.lo), int(lab.hi), LabelKind(lab.kind), lab.source_region)
        if lab.lo >= lab.hi:
            raise LabelError(
                f"label spans fewer than two points: [{lab.lo}, {lab.hi}]"
            )
        if lab.lo < 1 or lab.hi > n:
            raise LabelError(f"label out of range: [{lab.lo}, {lab.hi}] with n={n}")
        items.append(lab)
    items.sort(key=lambda lab: (lab.lo, lab.hi))
    for left, right in zip(items, items[1:]):
        if not left.hi < right.lo:
            raise LabelError(
                f"labels overlap or touch: [{left.lo}, {left.hi}] {left.kind.file_name}"
                f" and [{right.lo}, {right.hi}] {right.kind.file_name}"
            )
    return LabelSet(tuple(items), int(n))


class LabelContext(NamedTuple):
    label_id: int
    kind: LabelKind
    position: Position


class LabelCursor:
    """Left-to-right label lookup in amortized constant time.

    Indices must be queried in non-decreasing order.
    """

    def __init__(self, labels: LabelSet):
        self._labels = labels.labels
        self._j = 0
        self._last = 0

    def get_label(self, i: int) -> Optional[LabelContext]:
        if i < self._last:
            raise ValueError("LabelCursor queries must be non-decreasing")
        self._last = i
        labs = self._labels
        while self._j < len(labs) and labs[self._j].hi < i:
            self._j += 1
        if self._j == len(labs):
            return None
        lab = labs[self._j]
        if i < lab.lo:
            return None
        if i == lab.lo:
            pos = Position.FIRST
        elif i == lab.hi:
            pos = Position.LAST
        else:
            pos = Position.INTERIOR
        return LabelContext(self._j, lab.kind, pos)


def get_label(i: int, labels: LabelSet) -> Optional[LabelContext]:
    """Random-access lookup; use :class:`LabelCursor` when sweeping."""
    los = [lab.lo for lab in labels.labels]
    j = int(np.searchsorted(los, i, side="right")) - 1
    if j < 0 or labels.labels[j].hi < i:
        return None
    cursor = LabelCursor(LabelSet(labels.labels[j:j + 1], labels.n))
    ctx = cursor.get_label(i)
    return ctx._replace(label_id=j)


# rule codes understood by the DP kernels
UNLABELED = 0
NO_PEAKS = 1
PEAK_START_FIRST, PEAK_START_INTERIOR, PEAK_START_LAST = 2, 3, 4
PEAK_END_FIRST, PEAK_END_INTERIOR, PEAK_END_LAST = 5, 6, 7


def rule_codes(labels: LabelSet) -> np.ndarray:
    """Per-index rule code array (0-based positions) for the DP kernel."""
    codes = np.zeros(labels.n, dtype=np.int8)
    for lab in labels.labels:
        lo, hi = lab.lo - 1, lab.hi - 1
        if lab.kind == LabelKind.NO_PEAKS:
            codes[lo:hi + 1] = NO_PEAKS
        elif lab.kind == LabelKind.PEAK_START:
            codes[lo] = PEAK_START_FIRST
            codes[lo + 1:hi] = PEAK_START_INTERIOR
            codes[hi] = PEAK_START_LAST
        else:
            codes[lo] = PEAK_END_FIRST
            codes[lo + 1:hi] = PEAK_END_INTERIOR
            codes[hi] = PEAK_END_LAST
    return codes


def map_genomic_to_indices(regions: Sequence[tuple], data) -> List[Label]:
    """Convert (chrom, start, end, kind) regions to index labels.

    A label covers every data point whose half-open genomic interval
    intersects the region's ``[start, end)``.
    """
    if data.coords is None:
        raise LabelError("data has no genomic coordinates")
    chrom = data.chrom
    starts, ends = data.starts, data.ends
    out = []
    for reg_chrom, start, end, kind in regions:
        region = (reg_chrom, int(start), int(end))
        if reg_chrom != chrom:
            raise LabelError(f"chromosome mismatch: label on {reg_chrom}, data on {chrom}")
        # first point ending after start, last point starting before end
        first = int(np.searchsorted(ends, start, side="right"))
        last = int(np.searchsorted(starts, end, side="left")) - 1
        if last < first:
            raise LabelError(f"label covers no data: {reg_chrom}:{start}-{end}")
        if last == first:
            raise LabelError(f"label covers a single data point: {reg_chrom}:{start}-{end}")
        if not isinstance(kind, LabelKind):
            kind = LabelKind.parse(kind) if isinstance(kind, str) else LabelKind(kind)
        out.append(Label(first + 1, last + 1, kind, region))
    return out


def read_labels(path, data=None, index_mode: bool = False, n: Optional[int] = None) -> LabelSet:
    """Read a labels TSV and return a validated LabelSet.

    Genomic files have columns ``chrom start end type``; index files have
    ``lo hi type``. Genomic labels need ``data`` for the index mapping;
    index labels are checked against ``n`` (or ``data.n``).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = None
        for lineno, rec in enumerate(reader, start=1):
            if not rec or not "".join(rec).strip() or rec[0].startswith("#"):
                continue
            if header is None:
                header = [h.strip() for h in rec]
                continue
            rows.append((lineno, [r.strip() for r in rec]))
    expected = ["lo", "hi", "type"] if index_mode else ["chrom", "start", "end", "type"]
    if header is None:
        header = expected
    if header != expected:
        raise LabelError(f"labels header must be {' '.join(expected)}, got {' '.join(header)}")
    if index_mode:
        labels = []
        for lineno, rec in rows:
            if len(rec) != 3:
                raise LabelError(f"malformed line {lineno}")
            try:
                lo, hi = int(rec[0]), int(rec[1])
            except ValueError:
                raise LabelError(f"malformed line {lineno}") from None
            labels.append(Label(lo, hi, LabelKind.parse(rec[2])))
        if n is None:
            n = data.n if data is not None else max((lab.hi for lab in labels), default=0)
        return validate(labels, n)
    if data is None:
        raise LabelError("genomic labels need coverage data for index mapping")
    regions = []
    for lineno, rec in rows:
        if len(rec) != 4:
            raise LabelError(f"malformed line {lineno}")
        try:
            regions.append((rec[0], int(rec[1]), int(rec[2]), LabelKind.parse(rec[3])))
        except ValueError as err:
            if isinstance(err, LabelError):
                raise
            raise LabelError(f"malformed line {lineno}") from None
    return validate(map_genomic_to_indices(regions, data), data.n)


def write_labels(labels: Iterable[Label], path, data=None) -> None:
    """Write labels in genomic mode when ``data`` has coordinates, else index mode."""
    genomic = data is not None and data.coords is not None
    with open(path, "w", newline="") as fh:
        if genomic:
            fh.write("chrom\tstart\tend\ttype\n")
            for lab in labels:
                if lab.source_region is not None:
                    chrom, start, end = lab.source_region
                else:
                    chrom = data.chrom
                    start, end = int(data.starts[lab.lo - 1]), int(data.ends[lab.hi - 1])
                fh.write(f"{chrom}\t{start}\t{end}\t{lab.kind.file_name}\n")
        else:
            fh.write("lo\thi\ttype\n")
            for lab in labels:
                fh.write(f"{lab.lo}\t{lab.hi}\t{lab.kind.file_name}\n")
