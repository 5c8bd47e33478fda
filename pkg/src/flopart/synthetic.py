"""Synthetic coverage with planted peaks and matching labels."""

from __future__ import annotations

from typing import List

import numpy as np

from flopart.data import CountSequence
from flopart.labels import Label, LabelKind, LabelSet, validate

__all__ = ["generate_synthetic", "planted_peaks", "SYNTH_CHROM"]

SYNTH_CHROM = "chrSynth"


def planted_peaks(n: int, peak_count: int) -> List[tuple]:
    """Evenly spaced peaks: n is cut into 2*peak_count + 1 blocks, odd blocks are peaks."""
    blocks = 2 * peak_count + 1
    edges = np.linspace(0, n, blocks + 1).round().astype(int)
    return [(int(edges[2 * k + 1]) + 1, int(edges[2 * k + 2])) for k in range(peak_count)]


def _labels_for(n: int, peaks: List[tuple]) -> List[Label]:
    if not peaks:
        q = max(1, n // 4)
        return [Label(q, n - q + 1, LabelKind.NO_PEAKS)]
    shortest = min(e - s + 1 for s, e in peaks)
    gaps = [peaks[0][0] - 1] + [b[0] - a[1] - 1 for a, b in zip(peaks, peaks[1:])]
    gaps.append(n - peaks[-1][1])
    h = max(1, min(shortest, min(gaps)) // 4)
    labels = []
    prev_end = 0
    for s, e in peaks:
        # noPeaks in the middle of the gap before this peak
        gap_lo, gap_hi = prev_end + 1, s - 1
        mid_lo, mid_hi = gap_lo + h + 1, gap_hi - h - 1
        if mid_hi - mid_lo >= 1:
            labels.append(Label(mid_lo, mid_hi, LabelKind.NO_PEAKS))
        # up change enters at s: lo < s <= hi
        labels.append(Label(s - h, s + h - 1, LabelKind.PEAK_START))
        # down change enters at e + 1: lo <= e < hi
        labels.append(Label(e - h + 1, e + h, LabelKind.PEAK_END))
        prev_end = e
    gap_lo, gap_hi = prev_end + 1, n
    mid_lo, mid_hi = gap_lo + h + 1, gap_hi - h - 1
    if mid_hi - mid_lo >= 1:
        labels.append(Label(mid_lo, mid_hi, LabelKind.NO_PEAKS))
    return labels


def generate_synthetic(n: int, peak_count: int, background_mean: float = 1.0,
                       peak_mean: float = 10.0, seed: int = 0) -> tuple:
    """Poisson counts with planted peaks.

    Returns (CountSequence with unit-width coordinates, LabelSet). Each
    planted peak gets one peakStart and one peakEnd label around its
    boundaries, and gaps get noPeaks labels.

    Raises:
        ValueError: "peaks do not fit" when blocks would be under 8 points.
    """
    if not peak_mean > background_mean > 0:
        raise ValueError("need peak_mean > background_mean > 0")
    if n < 1 or peak_count < 0:
        raise ValueError("need n >= 1 and peak_count >= 0")
    if n // (2 * peak_count + 1) < 8 or (peak_count == 0 and n < 4):
        raise ValueError("peaks do not fit")
    peaks = planted_peaks(n, peak_count)
    mean = np.full(n, float(background_mean))
    for s, e in peaks:
        mean[s - 1:e] = peak_mean
    rng = np.random.default_rng(seed)
    values = rng.poisson(mean).astype(np.float64)
    starts = np.arange(n, dtype=np.int64)
    data = CountSequence(values, np.ones(n), (SYNTH_CHROM, starts, starts + 1))
    return data, validate(_labels_for(n, peaks), n)
