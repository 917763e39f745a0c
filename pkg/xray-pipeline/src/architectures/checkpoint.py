"""
Binary checkpoint codec.

Layout (little-endian):

    b"XRN1"                     magic
    u32                         format version (1)
    u32 + UTF-8 JSON            ModelConfig
    u32                         tensor count
    per tensor:
        u16 + UTF-8             name
        u8                      dtype tag (0 = float32, 1 = float64)
        u8                      ndim
        u64 * ndim              dims
        raw data                row-major element bytes

Checkpoints hold parameters and configuration only; optimizer state is not saved.
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from src.architectures.config import ModelConfig
from src.architectures.network import ModelGraph, parameter_shapes, stage_shapes
from src.autodiff.tensor import DType, Tensor
from src.utils.errors import ConfigurationError, FormatError, StorageError, validate_record
from src.utils.io import readable_path, write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"XRN1"
VERSION = 1

DTYPE_TAGS = {DType.FLOAT32: 0, DType.FLOAT64: 1}
TAG_DTYPES = {tag: dtype for dtype, tag in DTYPE_TAGS.items()}


def encode_checkpoint(model: ModelGraph) -> bytes:
    config_blob = model.config.model_dump_json().encode("utf-8")
    parts = [MAGIC, struct.pack("<II", VERSION, len(config_blob)), config_blob]
    parts.append(struct.pack("<I", len(model.parameters)))
    for name, tensor in model.parameters.items():
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<BB", DTYPE_TAGS[tensor.dtype], len(tensor.shape)))
        parts.append(struct.pack(f"<{len(tensor.shape)}Q", *tensor.shape))
        parts.append(tensor.numpy().astype(tensor.dtype.numpy.newbyteorder("<"), copy=False).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.payload):
            raise FormatError(f"Truncated checkpoint while reading {what}", offset=self.pos)
        chunk = self.payload[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(payload: bytes) -> ModelGraph:
    reader = _Reader(payload)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    version_at = reader.pos
    (version,) = reader.unpack("<I", "version")
    if version != VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}", offset=version_at)

    config_at = reader.pos
    (config_len,) = reader.unpack("<I", "config length")
    try:
        config_data = json.loads(reader.take(config_len, "config").decode("utf-8"))
        config = validate_record(ModelConfig, config_data)
    except (UnicodeDecodeError, json.JSONDecodeError, ConfigurationError) as e:
        raise FormatError(f"Unreadable model configuration: {e}", offset=config_at) from None

    expected = parameter_shapes(config)
    count_at = reader.pos
    (count,) = reader.unpack("<I", "tensor count")
    if count != len(expected):
        raise FormatError(f"Checkpoint holds {count} tensors, config needs {len(expected)}", offset=count_at)

    parameters: Dict[str, Tensor] = {}
    dtype = None
    for _ in range(count):
        entry_at = reader.pos
        (name_len,) = reader.unpack("<H", "tensor name length")
        try:
            name = reader.take(name_len, "tensor name").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("Tensor name is not UTF-8", offset=entry_at) from None
        tag, ndim = reader.unpack("<BB", f"header of {name}")
        if tag not in TAG_DTYPES:
            raise FormatError(f"Unknown dtype tag {tag} for {name}", offset=entry_at)
        dims = reader.unpack(f"<{ndim}Q", f"dims of {name}")
        if name not in expected or tuple(dims) != expected[name]:
            raise FormatError(f"Unexpected tensor {name} with shape {list(dims)}", offset=entry_at)
        if name in parameters:
            raise FormatError(f"Duplicate tensor {name}", offset=entry_at)
        if dtype is None:
            dtype = TAG_DTYPES[tag]
        elif TAG_DTYPES[tag] != dtype:
            raise FormatError(f"Mixed element types at {name}", offset=entry_at)
        np_dtype = dtype.numpy.newbyteorder("<")
        raw = reader.take(int(np.prod(dims)) * np_dtype.itemsize, f"data of {name}")
        values = np.frombuffer(raw, dtype=np_dtype).astype(dtype.numpy).reshape(dims)
        parameters[name] = Tensor.wrap(values)

    if reader.pos != len(payload):
        raise FormatError(f"{len(payload) - reader.pos} trailing bytes after last tensor", offset=reader.pos)

    # Keep initialization order regardless of file order
    ordered = {name: parameters[name] for name in expected}
    return ModelGraph(config=config, parameters=ordered, stage_shapes=stage_shapes(config), dtype=dtype or DType.FLOAT32)


def save_checkpoint(model: ModelGraph, path: Union[str, Path]) -> Path:
    out = write_bytes(path, encode_checkpoint(model))
    logger.info(f"Checkpoint written: {out} ({len(model.parameters)} tensors)")
    return out


def load_checkpoint(path: Union[str, Path]) -> ModelGraph:
    src = readable_path(path)
    try:
        payload = src.read_bytes()
    except OSError as e:
        raise StorageError(f"Cannot read {src}: {e}") from e
    model = decode_checkpoint(payload)
    logger.info(f"Checkpoint loaded: {src} ({model.config.arch}, {model.parameter_count} parameters)")
    return model
