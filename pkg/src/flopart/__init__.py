"""Label-constrained up-down peak detection for weighted count data."""

from flopart.cost_function import CostFunction, PoissonPiece
from flopart.data import CountSequence, read_coverage
from flopart.dp_engine import InfeasibleLabelsError, SegmentationResult, fit
from flopart.evaluation import extract_peaks, label_errors
from flopart.labels import Label, LabelError, LabelKind, LabelSet, validate

__version__ = "0.1.0"

__all__ = [
    "CostFunction",
    "PoissonPiece",
    "CountSequence",
    "read_coverage",
    "fit",
    "SegmentationResult",
    "InfeasibleLabelsError",
    "extract_peaks",
    "label_errors",
    "Label",
    "LabelKind",
    "LabelSet",
    "LabelError",
    "validate",
]
