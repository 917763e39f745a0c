"""
ROC curves by threshold sweep and AUC by trapezoidal integration.

Thresholds are the distinct scores in decreasing order, preceded by +inf,
so the curve starts at (0, 0) and ends at (1, 1). Tied scores move the
curve diagonally, which makes the trapezoidal area equal to the
Mann-Whitney statistic with ties counted one half.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from src.utils.errors import UsageError

logger = logging.getLogger(__name__)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class RocCurve:
    class_name: str
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _binary_inputs(scores: Sequence[float], labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise UsageError(f"{len(scores)} scores but {len(labels)} labels")
    if not np.isin(labels, (0, 1)).all():
        raise UsageError("Labels must be binary (0 or 1)")
    labels = labels.astype(bool)
    if labels.all() or not labels.any():
        raise UsageError("ROC needs at least one positive and one negative label (AUC undefined)")
    if not np.isfinite(scores).all():
        raise UsageError("Scores must be finite")
    return scores, labels


def roc_curve(scores: Sequence[float], labels: Sequence[int], class_name: str = "positive") -> RocCurve:
    scores, labels = _binary_inputs(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    tps = np.cumsum(sorted_labels)
    fps = np.cumsum(~sorted_labels)
    # Last index of every run of equal scores
    boundaries = np.r_[np.flatnonzero(np.diff(sorted_scores)), len(sorted_scores) - 1]
    tpr = np.r_[0.0, tps[boundaries] / tps[-1]]
    fpr = np.r_[0.0, fps[boundaries] / fps[-1]]
    auc = float(_trapezoid(tpr, fpr))
    return RocCurve(class_name=class_name, fpr=fpr, tpr=tpr, auc=auc)


def rank_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AUC from the Mann-Whitney U statistic (mid-ranks for ties)."""
    scores, labels = _binary_inputs(scores, labels)
    ranks = rankdata(scores)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def one_vs_rest_roc(
    probabilities: np.ndarray,
    labels: Sequence[int],
    class_names: Sequence[str],
) -> List[RocCurve]:
    """One curve per class from that class's probability column; classes lacking positives or negatives are skipped."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels).reshape(-1)
    if probabilities.ndim != 2 or probabilities.shape != (len(labels), len(class_names)):
        raise UsageError(
            f"Probabilities of shape {list(probabilities.shape)} do not match "
            f"{len(labels)} labels x {len(class_names)} classes"
        )
    curves = []
    for c, name in enumerate(class_names):
        positives = labels == c
        if positives.all() or not positives.any():
            logger.warning(f"Skipping ROC for class '{name}': needs both positive and negative samples")
            continue
        curves.append(roc_curve(probabilities[:, c], positives.astype(int), class_name=name))
    return curves
