# test/test_synthetic.py
import numpy as np
import pytest

from src.ingestion.manifest import class_histogram, load_manifest
from src.ingestion.synthetic import class_anchor, generate_synthetic, load_sidecar, region_mean_classifier
from src.preprocessing.images import decode_gray, load_samples
from src.utils.errors import ParameterError


def test_generates_images_sidecars_and_manifest(synthetic_dir):
    manifest = load_manifest(synthetic_dir / "manifest.csv")
    assert class_histogram(manifest) == {"covid": 4, "normal": 4, "pneumonia": 4}
    assert len(list(synthetic_dir.glob("*.png"))) == 12

    sidecar = load_sidecar(synthetic_dir / "normal_0002.png")
    assert sidecar["path"] == "normal_0002.png"
    assert sidecar["classIndex"] == 1
    x0, y0, x1, y1 = sidecar["featureBox"]
    assert x1 - x0 == y1 - y0 == 8
    assert 0 <= x0 and x1 <= 32 and 0 <= y0 and y1 <= 32
    print(f"✓ Generated {len(manifest)} images with sidecars")


def test_generation_is_deterministic(tmp_path):
    generate_synthetic(tmp_path / "a", num_per_class=2, size=32, num_classes=2, seed=5)
    generate_synthetic(tmp_path / "b", num_per_class=2, size=32, num_classes=2, seed=5)
    for name in ["covid_0000.png", "normal_0001.png", "manifest.csv", "covid_0001.json"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_feature_box_is_brighter_than_background(synthetic_dir):
    for path in sorted(synthetic_dir.glob("*.png")):
        plane = decode_gray(path)
        x0, y0, x1, y1 = load_sidecar(path)["featureBox"]
        inside = plane[y0:y1, x0:x1].mean()
        outside = np.delete(plane.reshape(-1), [r * 32 + c for r in range(y0, y1) for c in range(x0, x1)]).mean()
        assert inside > outside + 40


def test_pixel_statistics_classifier_separates_classes(tmp_path):
    manifest = generate_synthetic(tmp_path / "sep", num_per_class=10, size=64, num_classes=3, seed=8)
    samples = load_samples(manifest, None, 64)
    predictions = [region_mean_classifier(s.image.numpy(), 3) for s in samples]
    assert predictions == [s.label_index for s in samples]


def test_anchors_do_not_overlap():
    boxes = [class_anchor(k, 64) for k in range(3)]
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = boxes[i], boxes[j]
            assert a[2] <= b[0] or b[2] <= a[0] or a[3] <= b[1] or b[3] <= a[1]


@pytest.mark.parametrize(
    "kwargs", [{"num_per_class": 0, "size": 32}, {"num_per_class": 2, "size": 8}, {"num_per_class": 2, "size": 32, "num_classes": 4}]
)
def test_bad_parameters(tmp_path, kwargs):
    with pytest.raises(ParameterError):
        generate_synthetic(tmp_path / "bad", **kwargs)
