# test/test_report.py
import json

import numpy as np
import pandas as pd
import pytest

from src.config import REFERENCE_CONFUSION
from src.metrics import ConfusionMatrix, build_report, read_report, render_tables, report_from_confusion, write_report
from src.metrics.report import round_half_away
from src.utils.errors import DataError, StorageError


@pytest.fixture
def three_class_report():
    rng = np.random.default_rng(4)
    actual = np.repeat([0, 1, 2], 10)
    logits = rng.normal(size=(30, 3))
    logits[np.arange(30), actual] += 1.5
    probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    return build_report(actual, probs, ["covid", "normal", "pneumonia"], {"arch": "wnet", "checkpoint": "m.xrn"})


def test_report_fields(three_class_report):
    data = json.loads(three_class_report.to_json())
    assert data["schemaVersion"] == 1
    assert data["classNames"] == ["covid", "normal", "pneumonia"]
    assert [c["name"] for c in data["classes"]] == data["classNames"]
    assert set(data["classes"][0]) == {"name", "precision", "recall", "specificity", "f1"}
    assert set(data["auc"]) == {"covid", "normal", "pneumonia"}
    assert "roc" not in data
    trace = sum(data["confusion"][i][i] for i in range(3))
    assert data["accuracy"] == trace / 30


def test_write_then_read_round_trip(three_class_report, tmp_path):
    write_report(three_class_report, tmp_path / "r.json", tmp_path / "roc.csv")
    again = read_report(tmp_path / "r.json", tmp_path / "roc.csv")
    assert again.confusion == three_class_report.confusion
    assert abs(again.accuracy - three_class_report.accuracy) < 1e-12
    for a, b in zip(again.classes, three_class_report.classes):
        for metric in ("precision", "recall", "specificity", "f1"):
            assert abs(getattr(a, metric) - getattr(b, metric)) < 1e-12
    for a, b in zip(again.roc, three_class_report.roc):
        assert a.class_name == b.class_name
        assert np.max(np.abs(a.fpr - b.fpr)) < 1e-12
        assert np.max(np.abs(a.tpr - b.tpr)) < 1e-12
    print("✓ Report round trip within 1e-12")


def test_roc_csv_layout(three_class_report, tmp_path):
    write_report(three_class_report, tmp_path / "r.json", tmp_path / "roc.csv")
    frame = pd.read_csv(tmp_path / "roc.csv")
    assert list(frame.columns) == ["class", "fpr", "tpr"]
    for _, group in frame.groupby("class"):
        assert group["fpr"].is_monotonic_increasing
        assert group["tpr"].is_monotonic_increasing


def test_empty_path_is_storage_error(three_class_report, tmp_path):
    with pytest.raises(StorageError):
        write_report(three_class_report, "", tmp_path / "roc.csv")


def test_malformed_report(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(DataError):
        read_report(tmp_path / "bad.json")
    (tmp_path / "wrong.json").write_text(json.dumps({"schemaVersion": 2, "accuracy": 1.0}))
    with pytest.raises(DataError):
        read_report(tmp_path / "wrong.json")


def test_inconsistent_accuracy_is_rejected(three_class_report, tmp_path):
    data = json.loads(three_class_report.to_json())
    data["accuracy"] = 0.123
    (tmp_path / "r.json").write_text(json.dumps(data))
    with pytest.raises(DataError):
        read_report(tmp_path / "r.json")


def test_undefined_metrics_become_warnings():
    report = report_from_confusion(ConfusionMatrix.of([[5, 0], [0, 0]], ["covid", "normal"]))
    assert any("normal: precision" in w for w in report.warnings)


@pytest.mark.parametrize("value,expected", [(0.99375, "0.9938"), (0.98765, "0.9877"), (0.00005, "0.0001"), (1.0, "1.0000"), (0.97435897, "0.9744")])
def test_round_half_away(value, expected):
    assert round_half_away(value) == expected


def test_rendered_tables_follow_published_layout():
    report = report_from_confusion(ConfusionMatrix.of(REFERENCE_CONFUSION["unet-binary"], ["covid", "normal"]))
    text = render_tables(report)
    print(text)
    assert text.startswith("accuracy: 0.9917")
    assert "actual \\ predicted" in text
    covid_row = next(line for line in text.splitlines() if line.startswith("covid") and "0.9744" in line)
    assert "1.0000" in covid_row
    assert "38" not in covid_row
