"""
Metrics report assembly, serialization and table rendering.

Report JSON (schemaVersion 1):

    {
      "schemaVersion": 1,
      "accuracy": float,
      "classNames": [str, ...],
      "classes": [{"name", "precision", "recall", "specificity", "f1"}, ...],
      "confusion": [[int, ...], ...],        rows actual, columns predicted
      "auc": {class name: float},
      "model": {identifier: value},
      "warnings": [str, ...]
    }

ROC CSV: header `class,fpr,tpr`, one row per curve point, classes in
vocabulary order and points in curve order. JSON keeps full precision;
rendered tables round half away from zero to 4 decimals.
"""
from __future__ import annotations

import json
import logging
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.metrics.confusion import ConfusionMatrix, confusion_from_predictions, metrics_from_confusion
from src.metrics.roc import RocCurve, one_vs_rest_roc
from src.utils.errors import DataError, StorageError, UsageError
from src.utils.io import readable_path, write_text

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ROC_COLUMNS = ["class", "fpr", "tpr"]


class ClassMetricsRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    precision: float = Field(..., ge=0, le=1)
    recall: float = Field(..., ge=0, le=1)
    specificity: float = Field(..., ge=0, le=1)
    f1: float = Field(..., ge=0, le=1)


class MetricsReport(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schemaVersion")
    accuracy: float = Field(..., ge=0, le=1)
    class_names: List[str] = Field(..., alias="classNames")
    classes: List[ClassMetricsRecord]
    confusion: List[List[int]]
    auc: Dict[str, float] = Field(default_factory=dict)
    model: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    roc: List[Any] = Field(default_factory=list, exclude=True)  # RocCurve, carried to the CSV

    @model_validator(mode="after")
    def check_consistency(self) -> "MetricsReport":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported schemaVersion {self.schema_version}")
        k = len(self.class_names)
        if len(self.confusion) != k or any(len(row) != k for row in self.confusion):
            raise ValueError(f"confusion must be {k}x{k}")
        if [c.name for c in self.classes] != self.class_names:
            raise ValueError("classes must follow classNames order")
        total = sum(sum(row) for row in self.confusion)
        if total and abs(self.accuracy - sum(self.confusion[i][i] for i in range(k)) / total) > 1e-12:
            raise ValueError("accuracy does not equal trace/total of the confusion matrix")
        return self

    @property
    def confusion_matrix(self) -> ConfusionMatrix:
        return ConfusionMatrix.of(self.confusion, self.class_names)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(by_alias=True), indent=2) + "\n"


def report_from_confusion(
    cm: ConfusionMatrix,
    roc: Sequence[RocCurve] = (),
    identifiers: Optional[Dict[str, Any]] = None,
) -> MetricsReport:
    accuracy, per_class = metrics_from_confusion(cm)
    warnings = [f"{m.name}: {metric} undefined (0/0), reported as 0" for m in per_class for metric in m.undefined]
    names = list(cm.class_names)
    covered = {curve.class_name for curve in roc}
    warnings += [f"{name}: AUC undefined (class lacks positives or negatives)" for name in names if roc and name not in covered]
    return MetricsReport(
        accuracy=accuracy,
        class_names=names,
        classes=[
            ClassMetricsRecord(name=m.name, precision=m.precision, recall=m.recall, specificity=m.specificity, f1=m.f1)
            for m in per_class
        ],
        confusion=cm.tolist(),
        auc={curve.class_name: curve.auc for curve in roc},
        model=dict(identifiers or {}),
        warnings=warnings,
        roc=list(roc),
    )


def build_report(
    actual: Sequence[int],
    probabilities: np.ndarray,
    class_names: Sequence[str],
    identifiers: Optional[Dict[str, Any]] = None,
) -> MetricsReport:
    """Confusion matrix from argmax predictions, ROC curves from the probabilities."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.ndim != 2 or probabilities.shape[1] != len(class_names):
        raise UsageError(f"Probabilities of shape {list(probabilities.shape)} do not match {len(class_names)} classes")
    predicted = probabilities.argmax(axis=1)
    cm = confusion_from_predictions(actual, predicted, len(class_names), class_names)
    roc = one_vs_rest_roc(probabilities, actual, class_names)
    return report_from_confusion(cm, roc, identifiers)


def roc_frame(report: MetricsReport) -> pd.DataFrame:
    frames = [
        pd.DataFrame({"class": curve.class_name, "fpr": curve.fpr, "tpr": curve.tpr}) for curve in report.roc
    ]
    if not frames:
        return pd.DataFrame(columns=ROC_COLUMNS)
    return pd.concat(frames, ignore_index=True)[ROC_COLUMNS]


def write_report(report: MetricsReport, json_path: Union[str, Path], roc_csv_path: Union[str, Path]) -> None:
    json_out = write_text(json_path, report.to_json())
    csv_out = write_text(roc_csv_path, roc_frame(report).to_csv(index=False, lineterminator="\n", float_format="%.17g"))
    logger.info(f"Report written: {json_out}, ROC points: {csv_out}")


def read_report(json_path: Union[str, Path], roc_csv_path: Optional[Union[str, Path]] = None) -> MetricsReport:
    src = readable_path(json_path)
    try:
        data = json.loads(src.read_text(encoding="utf-8"))
    except OSError as e:
        raise StorageError(f"Cannot read {src}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"Report {src} is not valid JSON: {e}") from None

    roc: List[RocCurve] = []
    if roc_csv_path is not None:
        csv_src = readable_path(roc_csv_path)
        frame = pd.read_csv(csv_src, dtype={"class": str})
        if list(frame.columns) != ROC_COLUMNS:
            raise DataError(f"ROC CSV header must be 'class,fpr,tpr', got '{','.join(frame.columns)}'")
        auc = data.get("auc", {})
        for name, group in frame.groupby("class", sort=False):
            roc.append(
                RocCurve(
                    class_name=str(name),
                    fpr=group["fpr"].to_numpy(dtype=np.float64),
                    tpr=group["tpr"].to_numpy(dtype=np.float64),
                    auc=float(auc.get(str(name), np.nan)),
                )
            )
    try:
        return MetricsReport.model_validate({**data, "roc": roc})
    except ValidationError as e:
        raise DataError(f"Report {src} does not follow schema version {SCHEMA_VERSION}: {e}") from None


def round_half_away(value: float, places: int = 4) -> str:
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def render_tables(report: MetricsReport, places: int = 4) -> str:
    """Per-class metrics table and confusion table (rows actual, columns predicted)."""
    metrics = pd.DataFrame(
        [
            {
                "class": c.name,
                "precision": round_half_away(c.precision, places),
                "recall": round_half_away(c.recall, places),
                "specificity": round_half_away(c.specificity, places),
                "f1": round_half_away(c.f1, places),
                "auc": round_half_away(report.auc[c.name], places) if c.name in report.auc else "-",
            }
            for c in report.classes
        ]
    ).set_index("class")
    confusion = pd.DataFrame(
        report.confusion,
        index=pd.Index(report.class_names, name="actual \\ predicted"),
        columns=report.class_names,
    )
    lines = [
        f"accuracy: {round_half_away(report.accuracy, places)}",
        "",
        metrics.to_string(),
        "",
        confusion.to_string(),
    ]
    return "\n".join(lines) + "\n"
