"""Figures written next to the TSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from flopart.labels import LabelKind  # noqa: E402

LABEL_COLORS = {
    LabelKind.NO_PEAKS: "#f6f4bf",
    LabelKind.PEAK_START: "#ffafaf",
    LabelKind.PEAK_END: "#ff4c4c",
}


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps PNG bytes stable across runs
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_segmentation(data, result, labels, path, title=None):
    """Data, segment means and labeled regions on the index axis."""
    fig, ax = plt.subplots(figsize=(10, 3.5))
    x = np.arange(1, data.n + 1)
    if labels is not None:
        for lab in labels:
            ax.axvspan(lab.lo - 0.5, lab.hi + 0.5, color=LABEL_COLORS[lab.kind],
                       alpha=0.8, lw=0)
    ax.plot(x, data.values, ".", color="grey", ms=2 if data.n > 500 else 5)
    for seg in result.segments:
        color = "#1f4e9c" if seg.state else "#2ca02c"
        ax.plot([seg.start - 0.5, seg.end + 0.5], [seg.mean, seg.mean], color=color, lw=2)
    handles = [Line2D([], [], color="#2ca02c", lw=2, label="background"),
               Line2D([], [], color="#1f4e9c", lw=2, label="peak")]
    kinds = {lab.kind for lab in labels} if labels is not None else set()
    handles += [Patch(color=LABEL_COLORS[k], label=k.file_name) for k in LABEL_COLORS if k in kinds]
    ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.0, 1.0), fontsize=8, frameon=False)
    ax.set_xlabel("data index")
    ax.set_ylabel("count")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_roc(curve, path, title=None):
    fig, ax = plt.subplots(figsize=(4, 4))
    fpr = [p[0] for p in curve.points]
    tpr = [p[1] for p in curve.points]
    ax.plot([0, 1], [0, 1], color="lightgrey", lw=1)
    ax.plot(fpr, tpr, "o-", ms=3)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title or f"AUC = {curve.auc:.3f}")
    _save(fig, path)


def plot_bench(records, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for name in sorted({r.algorithm for r in records}):
        rows = [r for r in records if r.algorithm == name]
        ax.loglog([r.n for r in rows], [r.seconds for r in rows], "o-", label=name)
    ax.set_xlabel("data points n")
    ax.set_ylabel("seconds (median)")
    ax.legend()
    _save(fig, path)


def plot_grid(rows, path):
    """Label errors against penalty for a grid run."""
    pens = sorted({r["penalty"] for r in rows})
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for metric in ("fp", "fn", "errors"):
        vals = {r["penalty"]: r["value"] for r in rows if r["metric"] == metric}
        ax.semilogx(pens, [vals[p] for p in pens], "o-", ms=3, label=metric)
    ax.set_xlabel("penalty")
    ax.set_ylabel("label errors")
    ax.legend()
    _save(fig, path)
