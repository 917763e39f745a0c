"""
Confusion matrices and one-vs-rest class metrics.

Rows are actual classes, columns predicted classes. For class c:
TP = cm[c, c], FN = row c minus TP, FP = column c minus TP, TN = the rest.
A ratio whose denominator is 0 is reported as 0 and flagged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # [K, K] int64
    class_names: Tuple[str, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_names)
        if counts.shape != (k, k):
            raise UsageError(f"Confusion counts of shape {list(counts.shape)} do not match {k} class names")
        if (counts < 0).any():
            raise UsageError("Confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def of(cls, counts: Sequence[Sequence[int]], class_names: Optional[Sequence[str]] = None) -> "ConfusionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        names = tuple(class_names) if class_names is not None else tuple(f"class{i}" for i in range(len(counts)))
        return cls(counts=counts, class_names=names)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0

    def tolist(self) -> List[List[int]]:
        return self.counts.tolist()


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    specificity: float
    f1: float
    undefined: Tuple[str, ...] = field(default=())  # metrics that hit 0/0

    @property
    def sensitivity(self) -> float:
        return self.recall


def confusion_from_predictions(
    actual: Sequence[int],
    predicted: Sequence[int],
    num_classes: int,
    class_names: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    actual = np.asarray(actual, dtype=np.int64).reshape(-1)
    predicted = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if actual.shape != predicted.shape:
        raise UsageError(f"{len(actual)} actual labels but {len(predicted)} predictions")
    if num_classes < 1:
        raise UsageError(f"num_classes must be >= 1, got {num_classes}")
    for name, arr in (("actual", actual), ("predicted", predicted)):
        bad = (arr < 0) | (arr >= num_classes)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise UsageError(f"{name}[{i}] = {arr[i]} is outside 0..{num_classes - 1}")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (actual, predicted), 1)
    names = class_names if class_names is not None else [f"class{i}" for i in range(num_classes)]
    return ConfusionMatrix(counts=counts, class_names=tuple(names))


def _ratio(num: int, den: int) -> Tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def metrics_from_confusion(cm: ConfusionMatrix) -> Tuple[float, List[ClassMetrics]]:
    """Accuracy and per-class precision, recall, specificity and F1."""
    if cm.total == 0:
        raise UsageError("Confusion matrix is empty")
    counts = cm.counts
    total = cm.total
    per_class: List[ClassMetrics] = []
    for c, name in enumerate(cm.class_names):
        tp = int(counts[c, c])
        fn = int(counts[c].sum()) - tp
        fp = int(counts[:, c].sum()) - tp
        tn = total - tp - fn - fp
        precision, p_undef = _ratio(tp, tp + fp)
        recall, r_undef = _ratio(tp, tp + fn)
        specificity, s_undef = _ratio(tn, tn + fp)
        f1, f_undef = _ratio(2 * precision * recall, precision + recall)
        undefined = tuple(
            m for m, flag in zip(("precision", "recall", "specificity", "f1"), (p_undef, r_undef, s_undef, f_undef)) if flag
        )
        if undefined:
            logger.warning(f"Class '{name}': {', '.join(undefined)} undefined (0/0), reported as 0")
        per_class.append(ClassMetrics(name, precision, recall, specificity, f1, undefined))
    return cm.accuracy, per_class
