from src.metrics.confusion import ClassMetrics, ConfusionMatrix, confusion_from_predictions, metrics_from_confusion
from src.metrics.roc import RocCurve, one_vs_rest_roc, rank_auc, roc_curve
from src.metrics.report import (
    MetricsReport,
    build_report,
    read_report,
    render_tables,
    report_from_confusion,
    write_report,
)

__all__ = [
    "ClassMetrics",
    "ConfusionMatrix",
    "confusion_from_predictions",
    "metrics_from_confusion",
    "RocCurve",
    "one_vs_rest_roc",
    "rank_auc",
    "roc_curve",
    "MetricsReport",
    "build_report",
    "read_report",
    "render_tables",
    "report_from_confusion",
    "write_report",
]
