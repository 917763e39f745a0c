"""
Dense N-dimensional tensor.

A Tensor wraps a C-contiguous, read-only numpy buffer. Shapes are tuples of
positive integers; element (i0, ..., ik) lives at offset sum(i_j * stride_j)
of the flat row-major buffer. Element type is float32 for training and
inference, float64 for gradient checks.
"""
from __future__ import annotations

from enum import Enum
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from src.utils.errors import ShapeError, SizeError, UsageError

Shape = Tuple[int, ...]
Fill = Union[float, int, Sequence[float], np.ndarray]


class DType(str, Enum):
    FLOAT32 = "float32"
    FLOAT64 = "float64"

    @property
    def numpy(self) -> np.dtype:
        return np.dtype(self.value)

    @classmethod
    def of(cls, dtype: Union["DType", str, np.dtype, type]) -> "DType":
        name = np.dtype(dtype.value if isinstance(dtype, DType) else dtype).name
        try:
            return cls(name)
        except ValueError:
            raise UsageError(f"Unsupported element type: {name}") from None


def _check_shape(shape: Iterable[int]) -> Shape:
    dims = tuple(int(d) for d in shape)
    if not dims:
        raise ShapeError("Shape must have at least one dimension")
    if any(d < 1 for d in dims):
        raise ShapeError(f"All dimensions must be >= 1, got {list(dims)}")
    return dims


class Tensor:
    __slots__ = ("_array",)

    def __init__(self, data: Union[np.ndarray, Sequence, float], dtype: Union[DType, str, None] = None):
        target = DType.of(dtype).numpy if dtype is not None else None
        array = np.array(data, dtype=target, copy=True, order="C")
        if target is None and array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        if array.ndim == 0:
            array = array.reshape(1)
        _check_shape(array.shape)
        array.setflags(write=False)
        self._array = array

    @classmethod
    def wrap(cls, array: np.ndarray) -> "Tensor":
        """Adopt an array without copying; the array becomes read-only."""
        t = cls.__new__(cls)
        array = np.ascontiguousarray(array)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        if array.ndim == 0:
            array = array.reshape(1)
        _check_shape(array.shape)
        array.setflags(write=False)
        t._array = array
        return t

    @property
    def shape(self) -> Shape:
        return tuple(self._array.shape)

    @property
    def dtype(self) -> DType:
        return DType.of(self._array.dtype)

    @property
    def size(self) -> int:
        return int(self._array.size)

    @property
    def strides(self) -> Shape:
        """Row-major strides in elements."""
        itemsize = self._array.itemsize
        return tuple(s // itemsize for s in self._array.strides)

    @property
    def data(self) -> np.ndarray:
        """Flat row-major buffer (read-only view)."""
        return self._array.reshape(-1)

    def offset(self, index: Sequence[int]) -> int:
        if len(index) != len(self.shape):
            raise UsageError(f"Index {list(index)} has wrong rank for shape {list(self.shape)}")
        for i, d in zip(index, self.shape):
            if not 0 <= i < d:
                raise UsageError(f"Index {list(index)} out of bounds for shape {list(self.shape)}")
        return int(sum(i * s for i, s in zip(index, self.strides)))

    def __getitem__(self, index: Sequence[int]) -> float:
        return float(self.data[self.offset(tuple(index))])

    def numpy(self) -> np.ndarray:
        return self._array

    def item(self) -> float:
        if self.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {list(self.shape)}")
        return float(self._array.reshape(-1)[0])

    def reshape(self, shape: Sequence[int]) -> "Tensor":
        dims = _check_shape(shape)
        if int(np.prod(dims)) != self.size:
            raise SizeError(f"Cannot reshape {list(self.shape)} into {list(dims)}")
        return Tensor.wrap(self._array.reshape(dims))

    def astype(self, dtype: Union[DType, str]) -> "Tensor":
        return Tensor(self._array, dtype=dtype)

    def equals(self, other: "Tensor") -> bool:
        """Bitwise equality of shape, element type and contents."""
        return (
            isinstance(other, Tensor)
            and self.shape == other.shape
            and self.dtype == other.dtype
            and self._array.tobytes() == other._array.tobytes()
        )

    def __repr__(self) -> str:
        return f"Tensor(shape={list(self.shape)}, dtype={self.dtype.value})"


def tensor_create(shape: Sequence[int], fill: Fill = 0.0, dtype: Union[DType, str] = DType.FLOAT32) -> Tensor:
    """Create a tensor of the given shape from a scalar fill or a flat buffer."""
    dims = _check_shape(shape)
    np_dtype = DType.of(dtype).numpy
    if np.isscalar(fill):
        return Tensor.wrap(np.full(dims, fill, dtype=np_dtype))
    buffer = np.asarray(fill, dtype=np_dtype).reshape(-1)
    expected = int(np.prod(dims))
    if buffer.size != expected:
        raise SizeError(f"Buffer of length {buffer.size} does not fill shape {list(dims)} ({expected} elements)")
    return Tensor.wrap(buffer.reshape(dims).copy())


def zeros(shape: Sequence[int], dtype: Union[DType, str] = DType.FLOAT32) -> Tensor:
    return tensor_create(shape, 0.0, dtype)


def ones(shape: Sequence[int], dtype: Union[DType, str] = DType.FLOAT32) -> Tensor:
    return tensor_create(shape, 1.0, dtype)


def zeros_like(t: Tensor) -> Tensor:
    return zeros(t.shape, t.dtype)
