"""Tensor-in, Tensor-out forms of the layer set for eager use outside a graph."""
from __future__ import annotations

from typing import Tuple

import numpy as np

from src.autodiff.tensor import Tensor
from src.layers import kernels
from src.layers.params import ConvParams, DenseParams


def conv2d_same(input: Tensor, params: ConvParams) -> Tensor:
    out, _ = kernels.conv2d_forward(input.numpy(), params.weights.numpy(), params.bias.numpy())
    return Tensor.wrap(out)


def relu(input: Tensor) -> Tensor:
    return Tensor.wrap(kernels.relu_forward(input.numpy()))


def maxpool2x2(input: Tensor) -> Tuple[Tensor, np.ndarray]:
    out, argmax = kernels.maxpool_forward(input.numpy())
    return Tensor.wrap(out), argmax


def upsample2x(input: Tensor) -> Tensor:
    return Tensor.wrap(kernels.upsample_forward(input.numpy()))


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    return Tensor.wrap(kernels.concat_forward(a.numpy(), b.numpy()))


def global_avg_pool(input: Tensor) -> Tensor:
    return Tensor.wrap(kernels.gap_forward(input.numpy()))


def dense(input: Tensor, params: DenseParams) -> Tensor:
    return Tensor.wrap(kernels.dense_forward(input.numpy(), params.weights.numpy(), params.bias.numpy()))


def softmax(logits: Tensor) -> Tensor:
    return Tensor.wrap(kernels.softmax_forward(logits.numpy()))


def softmax_cross_entropy(logits: Tensor, target: int) -> Tuple[float, Tensor]:
    """Returns (loss, probabilities)."""
    loss, probs = kernels.cross_entropy_forward(logits.numpy(), int(target))
    return float(loss[0]), Tensor.wrap(probs)
