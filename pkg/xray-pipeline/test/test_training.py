# test/test_training.py
import json
import threading

import numpy as np
import pytest

from src.architectures import ModelConfig, build_model
from src.autodiff import Tensor
from src.preprocessing.images import Sample
from src.training import (
    AdamState,
    BatchPrefetcher,
    TrainConfig,
    adam_step,
    evaluate_accuracy,
    preset,
    read_train_log,
    train,
    train_config_from,
)
from src.training.trainer import batch_loss_and_grads, epoch_batches
from src.utils.errors import ConfigurationError, DataError, NumericalError, ShapeError, UsageError


def make_samples(config, n, seed=0):
    rng = np.random.default_rng(seed)
    size = config.input_size
    return [
        Sample(
            image=Tensor(rng.uniform(0, 1, (1, size, size)), dtype="float32"),
            label_index=i % config.num_classes,
            source_path=f"sample_{i}.png",
        )
        for i in range(n)
    ]


@pytest.fixture
def small_config():
    return ModelConfig(arch="unet", input_size=8, base_channels=2, depth=1, num_classes=2, seed=1)


# ----- optimizer -----

def test_adam_first_step_closed_form():
    params = {"theta": Tensor([0.0], dtype="float64")}
    grads = {"theta": Tensor([1.0], dtype="float64")}
    cfg = TrainConfig(epochs=1)
    new, state = adam_step(params, grads, AdamState.for_parameters(params), cfg)
    assert abs(new["theta"].item() + 0.001) < 1e-6
    assert state.t == 1


def test_adam_constant_gradient_moves_by_learning_rate():
    params = {"w": Tensor([1.0, -1.0], dtype="float64")}
    grads = {"w": Tensor([0.5, -2.0], dtype="float64")}
    cfg = TrainConfig(epochs=1, learning_rate=0.01)
    state = AdamState.for_parameters(params)
    for step in range(5):
        before = params["w"].numpy().copy()
        params, state = adam_step(params, grads, state, cfg)
        delta = params["w"].numpy() - before
        assert np.allclose(delta, [-0.01, 0.01], atol=1e-6), f"step {step}: {delta}"


def test_adam_zero_gradient_leaves_parameters():
    params = {"w": Tensor([0.3, 0.7])}
    grads = {"w": Tensor([0.0, 0.0])}
    new, _ = adam_step(params, grads, AdamState.for_parameters(params), TrainConfig(epochs=1))
    assert new["w"].equals(params["w"])


def test_adam_keeps_parameter_dtype():
    params = {"w": Tensor([0.3, 0.7])}
    new, state = adam_step(params, {"w": Tensor([0.1, 0.1])}, AdamState.for_parameters(params), TrainConfig(epochs=1))
    assert new["w"].dtype == params["w"].dtype
    assert state.m["w"].dtype == np.float64


def test_adam_shape_errors():
    params = {"w": Tensor([0.3, 0.7])}
    with pytest.raises(ShapeError):
        adam_step(params, {"w": Tensor([0.1])}, AdamState(), TrainConfig(epochs=1))
    with pytest.raises(ShapeError):
        adam_step(params, {}, AdamState(), TrainConfig(epochs=1))


# ----- configuration -----

def test_train_config_defaults():
    cfg = TrainConfig(epochs=3)
    assert (cfg.batch_size, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon) == (4, 0.001, 0.9, 0.999, 1e-8)


@pytest.mark.parametrize(
    "values", [{"epochs": 0}, {"epochs": 2, "batch_size": 0}, {"epochs": 2, "learning_rate": 0}, {"epochs": 2, "beta1": 1.0}, {}]
)
def test_train_config_rejects(values):
    with pytest.raises(ConfigurationError):
        train_config_from(values)


def test_train_config_from_ignores_unset():
    cfg = train_config_from({"epochs": 2, "batch_size": None, "arch": "unet"})
    assert cfg.batch_size == 4


@pytest.mark.parametrize(
    "name,arch,classes,epochs",
    [("unet-binary", "unet", 2, 7), ("wnet-binary", "wnet", 2, 10), ("unet-ternary", "unet", 3, 13), ("wnet-ternary", "wnet", 3, 12)],
)
def test_presets(name, arch, classes, epochs):
    values = preset(name)
    assert (values["arch"], values["num_classes"], values["epochs"], values["batch_size"]) == (arch, classes, epochs, 4)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        preset("resnet")


# ----- loop -----

def test_epoch_batches_keep_short_tail():
    batches = epoch_batches(np.arange(10), 4)
    assert [len(b) for b in batches] == [4, 4, 2]


def test_one_batch_produces_one_record(small_config, tmp_path):
    model = build_model(small_config)
    samples = make_samples(small_config, 4)
    trained, records = train(model, samples, TrainConfig(epochs=1, batch_size=4), log_path=tmp_path / "train.jsonl")
    assert len(records) == 1
    assert records[0].epoch == 1 and records[0].batch == 1
    assert not trained.parameters["head.dense.weight"].equals(model.parameters["head.dense.weight"])

    lines = (tmp_path / "train.jsonl").read_text().splitlines()
    assert len(lines) == 1
    assert set(json.loads(lines[0])) == {"epoch", "batch", "loss", "acc", "ms"}
    assert read_train_log(tmp_path / "train.jsonl")[0].loss == records[0].loss


def test_record_count_per_epoch(small_config):
    model = build_model(small_config)
    _, records = train(model, make_samples(small_config, 10), TrainConfig(epochs=2, batch_size=4), timing=False)
    assert [(r.epoch, r.batch) for r in records] == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]
    assert all(r.wall_millis == 0 for r in records)
    assert all(0.0 <= r.running_accuracy <= 1.0 for r in records)


def test_training_is_deterministic(small_config, tmp_path):
    samples = make_samples(small_config, 6)
    cfg = TrainConfig(epochs=2, batch_size=3, seed=9)
    a, _ = train(build_model(small_config), samples, cfg, log_path=tmp_path / "a.jsonl", timing=False)
    b, _ = train(build_model(small_config), samples, cfg, log_path=tmp_path / "b.jsonl", timing=False)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert all(a.parameters[k].equals(b.parameters[k]) for k in a.parameters)


def test_empty_training_set(small_config):
    with pytest.raises(UsageError):
        train(build_model(small_config), [], TrainConfig(epochs=1))


def test_bad_label_names_the_sample(small_config):
    samples = make_samples(small_config, 2)
    samples[1] = Sample(image=samples[1].image, label_index=5, source_path="bad.png")
    with pytest.raises(DataError, match="bad.png"):
        train(build_model(small_config), samples, TrainConfig(epochs=1))


def test_wrong_image_size(small_config):
    samples = make_samples(ModelConfig(arch="unet", input_size=16, base_channels=2, depth=1), 2)
    with pytest.raises(ShapeError):
        train(build_model(small_config), samples, TrainConfig(epochs=1))


def test_non_finite_loss_aborts(small_config):
    model = build_model(small_config)
    params = dict(model.parameters)
    params["head.dense.bias"] = Tensor([np.nan, 0.0])
    broken = model.with_parameters(params)
    with pytest.raises(NumericalError):
        batch_loss_and_grads(broken, make_samples(small_config, 2))


def test_batch_gradients_cover_every_parameter(small_config):
    model = build_model(small_config)
    result = batch_loss_and_grads(model, make_samples(small_config, 3))
    assert set(result.grads) == set(model.parameters)
    assert result.loss > 0
    assert 0 <= result.correct <= 3


def test_evaluate_accuracy(small_config):
    model = build_model(small_config)
    acc, loss = evaluate_accuracy(model, make_samples(small_config, 4))
    assert 0.0 <= acc <= 1.0 and loss > 0
    with pytest.raises(UsageError):
        evaluate_accuracy(model, [])


def test_prefetcher_preserves_order():
    out = list(BatchPrefetcher(range(20), lambda i: i * i, depth=2))
    assert out == [i * i for i in range(20)]


def test_prefetcher_reraises_worker_errors():
    def assemble(i):
        if i == 3:
            raise DataError("broken batch")
        return i

    with pytest.raises(DataError, match="broken batch"):
        list(BatchPrefetcher(range(10), assemble))


def test_failed_training_joins_prefetch_thread(small_config):
    model = build_model(small_config)
    params = dict(model.parameters)
    params["head.dense.bias"] = Tensor([np.nan, 0.0], dtype="float32")
    broken = model.with_parameters(params)
    with pytest.raises(NumericalError):
        train(broken, make_samples(small_config, 8), TrainConfig(epochs=1, batch_size=1))
    alive = [t for t in threading.enumerate() if t.name == "batch-prefetch"]
    assert alive == []


@pytest.mark.slow
def test_overfit_reaches_full_training_accuracy(overfit_run):
    model, samples, _, records = overfit_run
    assert len(samples) == 16
    assert model.config.arch == "wnet" and model.config.num_classes == 3
    last_epoch = [r for r in records if r.epoch == 30]
    final_mean_loss = sum(r.loss for r in last_epoch) / len(last_epoch)
    acc, loss = evaluate_accuracy(model, samples)
    print(f"✓ Overfit accuracy {acc:.3f}, loss {loss:.4f}, final epoch mean loss {final_mean_loss:.4f}")
    assert acc == 1.0
    assert loss < 0.05
    assert final_mean_loss < 0.05
