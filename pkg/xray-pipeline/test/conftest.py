# test/conftest.py
import os

# Quiet, file-free logging for the whole session; must run before src.config is imported
os.environ.setdefault("XRAYNET_LOG_TO_FILE", "false")
os.environ.setdefault("XRAYNET_CONSOLE_LOG_LEVEL", "CRITICAL")

import numpy as np
import pytest

from src.architectures import ModelConfig, build_model
from src.autodiff.rng import Rng
from src.autodiff.tensor import Tensor
from src.ingestion.synthetic import generate_synthetic
from src.preprocessing.images import load_samples
from src.training import TrainConfig, train


@pytest.fixture
def mini_config():
    """The desk-scale ladder: 64x64 input, two pooling stages, 8 base channels."""
    return ModelConfig(arch="unet", input_size=64, base_channels=8, depth=2, num_classes=3)


@pytest.fixture
def tiny_config():
    """Small enough for finite differences and fast forward passes."""
    return ModelConfig(arch="wnet", input_size=8, base_channels=2, depth=1, num_classes=2)


@pytest.fixture
def random_image():
    def make(size, seed=0, channels=1):
        values = Rng(seed).uniform((channels, size, size))
        return Tensor(values, dtype="float32")

    return make


@pytest.fixture
def synthetic_dir(tmp_path):
    """Three classes, four 32x32 images each, written to a temporary directory."""
    out = tmp_path / "synthetic"
    generate_synthetic(out, num_per_class=4, size=32, num_classes=3, seed=3)
    return out


@pytest.fixture(scope="session")
def overfit_run(tmp_path_factory):
    """
    The desk-scale W-Net trained with default hyperparameters to memorize 16
    synthetic images over three classes (6 covid, 5 normal, 5 pneumonia).

    Returns (model, samples, data_dir, records). Shared by the slow acceptance tests.
    """
    data_dir = tmp_path_factory.mktemp("overfit") / "synthetic"
    manifest = generate_synthetic(data_dir, num_per_class=6, size=64, num_classes=3, seed=11)
    remaining = {0: 6, 1: 5, 2: 5}
    samples = []
    for s in load_samples(manifest, None, 64):
        if remaining[s.label_index] > 0:
            remaining[s.label_index] -= 1
            samples.append(s)
    config = ModelConfig(arch="wnet", input_size=64, base_channels=8, depth=2, num_classes=3, seed=5)
    model = build_model(config)
    print(f"\nTraining overfit model on {len(samples)} samples...")
    model, records = train(model, samples, TrainConfig(epochs=30, seed=5))
    print(f"✓ Final batch loss {records[-1].loss:.4f}")
    return model, samples, data_dir, records


@pytest.fixture
def float64_close():
    def check(a, b, tol):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        assert a.shape == b.shape, f"shape {a.shape} != {b.shape}"
        assert np.max(np.abs(a - b)) <= tol, f"max diff {np.max(np.abs(a - b))} > {tol}"

    return check
