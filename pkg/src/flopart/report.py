"""Tab-separated result files."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, List, Optional

from flopart.data import CountSequence
from flopart.dp_engine import SegmentationResult
from flopart.evaluation import LabelErrorReport, RocCurve

__all__ = [
    "STATE_NAMES",
    "summary_path",
    "write_segments",
    "read_segments",
    "segment_peaks",
    "write_error_report",
    "write_roc",
    "read_roc",
    "write_bench",
    "write_grid",
]

STATE_NAMES = {0: "background", 1: "peak"}
_STATE_OF = {v: k for k, v in STATE_NAMES.items()}


def _num(x: float) -> str:
    return repr(float(x))


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".summary.tsv")


def write_segments(result: SegmentationResult, data: CountSequence, path) -> None:
    """Segments TSV plus a ``<stem>.summary.tsv`` sibling.

    With coordinates the columns are ``chrom segStart segEnd mean state``
    in genomic half-open coordinates; without, ``segStart segEnd mean
    state`` in 1-based inclusive indices.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if data.coords is not None:
            fh.write("chrom\tsegStart\tsegEnd\tmean\tstate\n")
            for seg in result.segments:
                fh.write(
                    f"{data.chrom}\t{data.starts[seg.start - 1]}\t{data.ends[seg.end - 1]}"
                    f"\t{_num(seg.mean)}\t{STATE_NAMES[seg.state]}\n"
                )
        else:
            fh.write("segStart\tsegEnd\tmean\tstate\n")
            for seg in result.segments:
                fh.write(f"{seg.start}\t{seg.end}\t{_num(seg.mean)}\t{STATE_NAMES[seg.state]}\n")
    with open(summary_path(path), "w", newline="") as fh:
        fh.write("key\tvalue\n")
        fh.write(f"total_loss\t{_num(result.total_loss)}\n")
        fh.write(f"penalized_cost\t{_num(result.penalized_cost)}\n")
        fh.write(f"penalty\t{_num(result.penalty)}\n")
        fh.write(f"changes\t{result.change_count}\n")


def read_segments(path) -> tuple:
    """Return (genomic, rows) with rows as (chrom|None, start, end, mean, state)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader)
        genomic = header[0] == "chrom"
        expected = ["chrom", "segStart", "segEnd", "mean", "state"]
        if header != (expected if genomic else expected[1:]):
            raise ValueError(f"unrecognized segments header: {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                if genomic:
                    rows.append((rec[0], int(rec[1]), int(rec[2]), float(rec[3]), _STATE_OF[rec[4]]))
                else:
                    rows.append((None, int(rec[0]), int(rec[1]), float(rec[2]), _STATE_OF[rec[3]]))
            except (ValueError, KeyError, IndexError):
                raise ValueError(f"malformed line {lineno}") from None
    return genomic, rows


def segment_peaks(rows: Iterable[tuple]) -> List[tuple]:
    """Merge adjacent peak-state rows into (start, end) peaks."""
    peaks: List[tuple] = []
    for _, start, end, _, state in rows:
        if state != 1:
            continue
        if peaks and peaks[-1][1] in (start, start - 1):
            peaks[-1] = (peaks[-1][0], end)
        else:
            peaks.append((start, end))
    return peaks


def write_error_report(report: LabelErrorReport, path, chrom: Optional[str] = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("label_id\tchrom\tlo\thi\ttype\toutcome\n")
        for j, (lab, outcome) in enumerate(zip(report.labels, report.outcomes), start=1):
            if lab.source_region is not None and chrom is None:
                c, lo, hi = lab.source_region
            else:
                c, lo, hi = chrom or ".", lab.lo, lab.hi
            fh.write(f"{j}\t{c}\t{lo}\t{hi}\t{lab.kind.file_name}\t{outcome.value}\n")


def write_roc(curve: RocCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("c\tfp\tfn\tfpr\ttpr\n")
        for r in curve.rows:
            fh.write(f"{_num(r['c'])}\t{r['fp']}\t{r['fn']}\t{_num(r['fpr'])}\t{_num(r['tpr'])}\n")
        fh.write(f"auc\t{_num(curve.auc)}\n")


def read_roc(path) -> tuple:
    """Return (rows, auc) from a file written by :func:`write_roc`."""
    rows, area = [], None
    with open(path) as fh:
        next(fh)
        for line in fh:
            rec = line.rstrip("\n").split("\t")
            if rec[0] == "auc":
                area = float(rec[1])
            else:
                rows.append({"c": float(rec[0]), "fp": int(rec[1]), "fn": int(rec[2]),
                             "fpr": float(rec[3]), "tpr": float(rec[4])})
    return rows, area


def write_bench(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("n\talgorithm\tseconds\tpieces_max\n")
        for r in records:
            fh.write(f"{r.n}\t{r.algorithm}\t{_num(r.seconds)}\t{r.pieces_max}\n")


def write_grid(rows: Iterable[dict], path) -> None:
    """Long format: one row per (penalty, metric)."""
    with open(path, "w", newline="") as fh:
        fh.write("penalty\tmetric\tvalue\n")
        for r in rows:
            fh.write(f"{_num(r['penalty'])}\t{r['metric']}\t{r['value']}\n")
