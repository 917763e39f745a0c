# test/test_images.py
import numpy as np
import pytest
from PIL import Image

from src.ingestion.manifest import build_manifest
from src.preprocessing.images import decode_and_resize, decode_gray, load_samples, resize_bilinear
from src.utils.errors import DataError, StorageError


def save_png(path, array):
    Image.fromarray(array).save(path, format="PNG")
    return path


def test_constant_image_stays_constant(tmp_path):
    path = save_png(tmp_path / "gray.png", np.full((30, 50), 128, dtype=np.uint8))
    t = decode_and_resize(path, 16)
    assert t.shape == (1, 16, 16)
    assert np.allclose(t.numpy(), 128 / 255, atol=1e-6)


def test_rgb_uses_luma_weights(tmp_path):
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[..., 0] = 200
    path = save_png(tmp_path / "red.png", rgb)
    assert np.allclose(decode_gray(path), 0.299 * 200)


def test_identity_resize_is_exact():
    plane = np.random.default_rng(0).uniform(0, 255, (8, 8))
    assert np.array_equal(resize_bilinear(plane, 8), plane)


def interpolate_pixel(plane, size, i, j):
    h, w = plane.shape
    y = min(max((i + 0.5) * h / size - 0.5, 0.0), h - 1)
    x = min(max((j + 0.5) * w / size - 0.5, 0.0), w - 1)
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
    fy, fx = y - y0, x - x0
    top = plane[y0, x0] * (1 - fx) + plane[y0, x1] * fx
    bottom = plane[y1, x0] * (1 - fx) + plane[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


@pytest.mark.parametrize("in_shape,size", [((4, 4), 2), ((5, 7), 9), ((6, 6), 4)])
def test_bilinear_matches_per_pixel_oracle(in_shape, size):
    plane = np.indices(in_shape).sum(axis=0) % 2 * 255.0
    out = resize_bilinear(plane, size)
    expected = np.array([[interpolate_pixel(plane, size, i, j) for j in range(size)] for i in range(size)])
    assert np.allclose(out, expected, atol=1e-9)


def test_checkerboard_downsample_averages():
    plane = np.indices((4, 4)).sum(axis=0) % 2 * 1.0
    assert np.allclose(resize_bilinear(plane, 2), 0.5)


def test_missing_file_is_storage_error(tmp_path):
    with pytest.raises(StorageError):
        decode_and_resize(tmp_path / "absent.png", 8)


def test_undecodable_file_is_data_error(tmp_path):
    path = tmp_path / "noise.png"
    path.write_bytes(b"not an image at all")
    with pytest.raises(DataError):
        decode_and_resize(path, 8)


def test_load_samples_preserves_order(tmp_path):
    paths, labels = [], []
    for i in range(6):
        name = f"img_{i}.png"
        save_png(tmp_path / name, np.full((10, 10), i * 40, dtype=np.uint8))
        paths.append(name)
        labels.append("covid" if i % 2 == 0 else "normal")
    manifest = build_manifest(paths, labels, base_dir=tmp_path)
    samples = load_samples(manifest, None, 8, workers=3)
    assert [s.source_path for s in samples] == paths
    assert [s.label_index for s in samples] == [0, 1, 0, 1, 0, 1]
    means = [float(s.image.numpy().mean()) for s in samples]
    assert means == sorted(means)
