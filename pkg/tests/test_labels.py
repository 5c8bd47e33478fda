import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flopart.checks import random_labels
from flopart.data import CountSequence
from flopart.labels import (
    Label,
    LabelCursor,
    LabelError,
    LabelKind,
    LabelSet,
    Position,
    get_label,
    map_genomic_to_indices,
    read_labels,
    rule_codes,
    validate,
    write_labels,
)

START, END, NONE = LabelKind.PEAK_START, LabelKind.PEAK_END, LabelKind.NO_PEAKS


def test_validate_accepts_and_sorts():
    ls = validate([Label(4, 6, END), Label(1, 3, START)], 8)
    assert [(lab.lo, lab.hi) for lab in ls] == [(1, 3), (4, 6)]
    assert ls.n == 8


@pytest.mark.parametrize(
    "labels, message",
    [
        ([Label(1, 3, START), Label(3, 5, START)], "labels overlap or touch"),
        ([Label(1, 3, NONE), Label(3, 5, END)], "labels overlap or touch"),
        ([Label(1, 4, NONE), Label(2, 3, START)], "labels overlap or touch"),
        ([Label(5, 5, NONE)], "label spans fewer than two points"),
        ([Label(6, 5, NONE)], "label spans fewer than two points"),
        ([Label(0, 2, NONE)], "label out of range"),
        ([Label(7, 9, NONE)], "label out of range"),
    ],
)
def test_validate_errors(labels, message):
    with pytest.raises(LabelError, match=message):
        validate(labels, 8)


def test_overlap_message_names_pair():
    with pytest.raises(LabelError) as err:
        validate([Label(1, 3, START), Label(3, 5, END)], 8)
    assert "[1, 3] peakStart" in str(err.value) and "[3, 5] peakEnd" in str(err.value)


def test_validate_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ls = random_labels(20, rng)
        assert validate(ls, 20) == ls
        assert validate(validate(list(ls), 20), 20) == ls


def test_get_label_examples():
    ls = validate([Label(1, 3, START), Label(5, 6, END)], 8)
    assert get_label(1, ls)[:] == (0, START, Position.FIRST)
    assert get_label(2, ls)[:] == (0, START, Position.INTERIOR)
    assert get_label(3, ls).position == Position.LAST
    assert get_label(4, ls) is None
    assert get_label(6, ls)[:] == (1, END, Position.LAST)
    assert get_label(7, ls) is None


def test_cursor_rejects_backwards():
    cur = LabelCursor(LabelSet.empty(5))
    cur.get_label(3)
    with pytest.raises(ValueError):
        cur.get_label(2)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_cursor_partitions_indices(n, seed):
    ls = random_labels(n, np.random.default_rng(seed))
    cur = LabelCursor(ls)
    seen = {}
    for i in range(1, n + 1):
        ctx = cur.get_label(i)
        assert ctx == get_label(i, ls)
        if ctx is not None:
            seen.setdefault(ctx.label_id, []).append((i, ctx.position))
    assert sorted(seen) == list(range(len(ls)))
    for j, hits in seen.items():
        lab = ls[j]
        assert [i for i, _ in hits] == list(range(lab.lo, lab.hi + 1))
        assert hits[0][1] == Position.FIRST and hits[-1][1] == Position.LAST
        assert all(p == Position.INTERIOR for _, p in hits[1:-1])


def test_rule_codes():
    ls = validate([Label(1, 2, NONE), Label(4, 7, START), Label(9, 10, END)], 11)
    assert rule_codes(ls).tolist() == [1, 1, 0, 2, 3, 3, 4, 0, 5, 7, 0]


def coords_data():
    return CountSequence(
        np.array([1.0, 2.0, 3.0]), np.array([10.0, 10.0, 10.0]),
        ("chr1", np.array([0, 10, 20]), np.array([10, 20, 30])),
    )


def test_genomic_mapping_intersection():
    (lab,) = map_genomic_to_indices([("chr1", 5, 25, "peakStart")], coords_data())
    assert (lab.lo, lab.hi, lab.kind) == (1, 3, START)
    assert lab.source_region == ("chr1", 5, 25)
    # half-open: [10, 20) touches only points 2
    with pytest.raises(LabelError, match="single data point"):
        map_genomic_to_indices([("chr1", 10, 20, "noPeaks")], coords_data())
    (lab,) = map_genomic_to_indices([("chr1", 9, 21, "noPeaks")], coords_data())
    assert (lab.lo, lab.hi) == (1, 3)


@pytest.mark.parametrize(
    "region, message",
    [
        (("chr1", 100, 110, "noPeaks"), "label covers no data"),
        (("chr1", 12, 18, "noPeaks"), "label covers a single data point"),
        (("chr2", 0, 30, "noPeaks"), "chromosome mismatch"),
    ],
)
def test_genomic_mapping_errors(region, message):
    with pytest.raises(LabelError, match=message):
        map_genomic_to_indices([region], coords_data())


def test_read_write_roundtrip(tmp_path):
    data = coords_data()
    ls = read_labels_from(tmp_path, "chrom\tstart\tend\ttype\nchr1\t0\t20\tpeakStart\n", data)
    assert [(lab.lo, lab.hi) for lab in ls] == [(1, 2)]
    out = tmp_path / "out.tsv"
    write_labels(ls, out, data)
    assert read_labels(out, data) == ls
    idx = tmp_path / "idx.tsv"
    write_labels(ls, idx)
    assert idx.read_text() == "lo\thi\ttype\n1\t2\tpeakStart\n"
    back = read_labels(idx, index_mode=True, n=3)
    assert [(lab.lo, lab.hi, lab.kind) for lab in back] == [(1, 2, START)]


def read_labels_from(tmp_path, text, data):
    path = tmp_path / "labels.tsv"
    path.write_text(text)
    return read_labels(path, data)


@pytest.mark.parametrize(
    "text, message",
    [
        ("chrom\tstart\tend\ttype\nchr1\t0\t20\tpeak\n", "unknown label type"),
        ("chrom\tstart\tend\ttype\nchr1\tx\t20\tnoPeaks\n", "malformed line 2"),
        ("lo\thi\ttype\n1\t2\tnoPeaks\n", "header"),
    ],
)
def test_read_labels_errors(tmp_path, text, message):
    with pytest.raises(LabelError, match=message):
        read_labels_from(tmp_path, text, coords_data())
