# test/test_checkpoint.py
import struct

import pytest

from src.architectures import ModelConfig, build_model, load_checkpoint, parameter_shapes, save_checkpoint
from src.architectures.checkpoint import MAGIC, decode_checkpoint, encode_checkpoint
from src.autodiff import DType
from src.utils.errors import FormatError, StorageError


@pytest.fixture
def small_model():
    return build_model(ModelConfig(arch="wnet", input_size=16, base_channels=2, depth=2, num_classes=3, seed=4))


def test_round_trip_is_exact(small_model, tmp_path):
    path = save_checkpoint(small_model, tmp_path / "models" / "wnet.xrn")
    loaded = load_checkpoint(path)
    assert loaded.config == small_model.config
    assert list(loaded.parameters) == list(small_model.parameters)
    assert all(loaded.parameters[k].equals(small_model.parameters[k]) for k in small_model.parameters)
    assert loaded.stage_shapes == small_model.stage_shapes
    print(f"✓ Round-tripped {len(loaded.parameters)} tensors")


def test_float64_checkpoint(tmp_path):
    model = build_model(ModelConfig(arch="unet", input_size=8, base_channels=2, depth=1), dtype=DType.FLOAT64)
    loaded = decode_checkpoint(encode_checkpoint(model))
    assert loaded.dtype is DType.FLOAT64
    assert loaded.parameters["head.dense.weight"].dtype is DType.FLOAT64


def test_encoding_is_deterministic(small_model):
    assert encode_checkpoint(small_model) == encode_checkpoint(small_model)


def test_header_layout(small_model):
    payload = encode_checkpoint(small_model)
    assert payload[:4] == MAGIC
    version, config_len = struct.unpack("<II", payload[4:12])
    assert version == 1
    count_at = 12 + config_len
    (count,) = struct.unpack("<I", payload[count_at : count_at + 4])
    assert count == len(parameter_shapes(small_model.config))


def test_reference_wnet_tensor_count_matches_inventory():
    config = ModelConfig(arch="wnet", input_size=16, base_channels=2, depth=4)
    payload = encode_checkpoint(build_model(config))
    config_len = struct.unpack("<I", payload[8:12])[0]
    (count,) = struct.unpack("<I", payload[12 + config_len : 16 + config_len])
    assert count == 74


@pytest.mark.parametrize("cut", [2, 10, 40, -1])
def test_truncated_file(small_model, cut):
    payload = encode_checkpoint(small_model)
    with pytest.raises(FormatError) as exc:
        decode_checkpoint(payload[:cut])
    assert exc.value.offset is not None


def test_bad_magic(small_model):
    payload = b"NOPE" + encode_checkpoint(small_model)[4:]
    with pytest.raises(FormatError) as exc:
        decode_checkpoint(payload)
    assert exc.value.offset == 0


def test_unsupported_version(small_model):
    payload = bytearray(encode_checkpoint(small_model))
    payload[4:8] = struct.pack("<I", 9)
    with pytest.raises(FormatError) as exc:
        decode_checkpoint(bytes(payload))
    assert exc.value.offset == 4


def test_trailing_bytes(small_model):
    with pytest.raises(FormatError):
        decode_checkpoint(encode_checkpoint(small_model) + b"\x00")


def test_config_that_disagrees_with_tensors(small_model):
    other = build_model(ModelConfig(arch="unet", input_size=16, base_channels=2, depth=2, num_classes=3))
    payload = encode_checkpoint(small_model)
    other_payload = encode_checkpoint(other)
    # Splice the unet header onto the wnet tensors
    other_len = struct.unpack("<I", other_payload[8:12])[0]
    own_len = struct.unpack("<I", payload[8:12])[0]
    spliced = other_payload[: 12 + other_len] + payload[12 + own_len :]
    with pytest.raises(FormatError):
        decode_checkpoint(spliced)


def test_missing_checkpoint_is_storage_error(tmp_path):
    with pytest.raises(StorageError):
        load_checkpoint(tmp_path / "absent.xrn")
    with pytest.raises(StorageError):
        save_checkpoint(build_model(ModelConfig(arch="unet", input_size=8, base_channels=2, depth=1)), "")
