from __future__ import annotations

import math
from dataclasses import dataclass

from src.autodiff.rng import Rng
from src.autodiff.tensor import DType, Tensor, zeros
from src.layers.kernels import KERNEL
from src.utils.errors import ShapeError


@dataclass(frozen=True)
class ConvParams:
    weights: Tensor  # [out_channels, in_channels, 3, 3]
    bias: Tensor  # [out_channels]

    def __post_init__(self):
        shape = self.weights.shape
        if len(shape) != 4 or shape[2:] != (KERNEL, KERNEL):
            raise ShapeError(f"Convolution weights must be [out, in, 3, 3], got {list(shape)}")
        if self.bias.shape != (shape[0],):
            raise ShapeError(f"Convolution bias must be [{shape[0]}], got {list(self.bias.shape)}")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class DenseParams:
    weights: Tensor  # [out_units, in_units]
    bias: Tensor  # [out_units]

    def __post_init__(self):
        shape = self.weights.shape
        if len(shape) != 2:
            raise ShapeError(f"Dense weights must be [out, in], got {list(shape)}")
        if self.bias.shape != (shape[0],):
            raise ShapeError(f"Dense bias must be [{shape[0]}], got {list(self.bias.shape)}")

    @property
    def out_units(self) -> int:
        return self.weights.shape[0]

    @property
    def in_units(self) -> int:
        return self.weights.shape[1]


def he_std(fan_in: int) -> float:
    """sqrt(2 / fan_in): variance scaling for ReLU networks."""
    return math.sqrt(2.0 / fan_in)


def init_conv(rng: Rng, in_channels: int, out_channels: int, dtype: DType = DType.FLOAT32) -> ConvParams:
    fan_in = in_channels * KERNEL * KERNEL
    weights = rng.fill_normal((out_channels, in_channels, KERNEL, KERNEL), 0.0, he_std(fan_in), dtype)
    return ConvParams(weights=weights, bias=zeros((out_channels,), dtype))


def init_dense(rng: Rng, in_units: int, out_units: int, dtype: DType = DType.FLOAT32) -> DenseParams:
    weights = rng.fill_normal((out_units, in_units), 0.0, he_std(in_units), dtype)
    return DenseParams(weights=weights, bias=zeros((out_units,), dtype))
