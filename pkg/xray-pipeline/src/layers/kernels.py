"""
Numpy forward/backward kernels for the layer set.

All feature maps are [C, H, W]. Convolutions are 3x3 with one pixel of zero
padding, computed as nine shifted matrix products so no im2col buffer is
materialised.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from src.utils.errors import ShapeError, UsageError

KERNEL = 3
PAD = 1


def _feature_map(x: np.ndarray, op: str) -> None:
    if x.ndim != 3:
        raise ShapeError(f"{op} expects a [C, H, W] feature map, got {list(x.shape)}")


# ----- convolution -----

def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _feature_map(x, "conv2d_same")
    c_in, h, w = x.shape
    if weight.ndim != 4 or weight.shape[2:] != (KERNEL, KERNEL):
        raise ShapeError(f"conv2d_same expects weights [out, in, 3, 3], got {list(weight.shape)}")
    c_out = weight.shape[0]
    if weight.shape[1] != c_in:
        raise ShapeError(f"input has {c_in} channels but weights expect {weight.shape[1]}")
    if bias.shape != (c_out,):
        raise ShapeError(f"bias shape {list(bias.shape)} does not match {c_out} output channels")

    padded = np.pad(x, ((0, 0), (PAD, PAD), (PAD, PAD)))
    out = np.empty((c_out, h * w), dtype=np.result_type(x, weight))
    out[...] = bias[:, None]
    for ki in range(KERNEL):
        for kj in range(KERNEL):
            shifted = padded[:, ki : ki + h, kj : kj + w].reshape(c_in, h * w)
            out += weight[:, :, ki, kj] @ shifted
    return out.reshape(c_out, h, w), padded


def conv2d_backward(
    grad: np.ndarray, padded: np.ndarray, weight: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    c_out, h, w = grad.shape
    c_in = weight.shape[1]
    g = grad.reshape(c_out, h * w)

    d_weight = np.empty_like(weight)
    d_padded = np.zeros_like(padded)
    for ki in range(KERNEL):
        for kj in range(KERNEL):
            shifted = padded[:, ki : ki + h, kj : kj + w].reshape(c_in, h * w)
            d_weight[:, :, ki, kj] = g @ shifted.T
            d_padded[:, ki : ki + h, kj : kj + w] += (weight[:, :, ki, kj].T @ g).reshape(c_in, h, w)
    d_bias = g.sum(axis=1)
    d_x = d_padded[:, PAD : PAD + h, PAD : PAD + w]
    return d_x, d_weight, d_bias


# ----- activations -----

def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Gradient at exactly 0 is 0
    return grad * (x > 0)


# ----- pooling / resampling -----

def maxpool_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling; returns (output, argmax in row-major window order)."""
    _feature_map(x, "maxpool2x2")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even height and width, got {h}x{w}")
    windows = x.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h // 2, w // 2, 4)
    # argmax returns the first maximum, so ties go to the earliest window position
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return out, argmax


def maxpool_backward(grad: np.ndarray, argmax: np.ndarray) -> np.ndarray:
    c, hh, ww = grad.shape
    windows = np.zeros((c, hh, ww, 4), dtype=grad.dtype)
    np.put_along_axis(windows, argmax[..., None], grad[..., None], axis=-1)
    return windows.reshape(c, hh, ww, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, hh * 2, ww * 2)


def upsample_forward(x: np.ndarray) -> np.ndarray:
    _feature_map(x, "upsample2x")
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def upsample_backward(grad: np.ndarray) -> np.ndarray:
    c, h2, w2 = grad.shape
    return grad.reshape(c, h2 // 2, 2, w2 // 2, 2).sum(axis=(2, 4))


def concat_forward(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _feature_map(a, "concat_channels")
    _feature_map(b, "concat_channels")
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(f"spatial sizes {list(a.shape[1:])} and {list(b.shape[1:])} differ")
    return np.concatenate([a, b], axis=0)


def concat_backward(grad: np.ndarray, channels_a: int) -> Tuple[np.ndarray, np.ndarray]:
    return grad[:channels_a], grad[channels_a:]


def gap_forward(x: np.ndarray) -> np.ndarray:
    _feature_map(x, "global_avg_pool")
    return x.mean(axis=(1, 2))


def gap_backward(grad: np.ndarray, shape: Tuple[int, int, int]) -> np.ndarray:
    c, h, w = shape
    return np.broadcast_to((grad / (h * w))[:, None, None], shape).copy()


# ----- classification head -----

def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 1:
        raise ShapeError(f"dense expects a vector input, got {list(x.shape)}")
    if weight.ndim != 2 or weight.shape[1] != x.shape[0]:
        raise ShapeError(f"input of length {x.shape[0]} does not match weights {list(weight.shape)}")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"bias shape {list(bias.shape)} does not match {weight.shape[0]} units")
    return weight @ x + bias


def dense_backward(grad: np.ndarray, x: np.ndarray, weight: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return weight.T @ grad, np.outer(grad, x), grad.copy()


def softmax_forward(logits: np.ndarray) -> np.ndarray:
    if logits.ndim != 1:
        raise ShapeError(f"softmax expects a vector, got {list(logits.shape)}")
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def softmax_backward(grad: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return probs * (grad - np.dot(grad, probs))


def cross_entropy_forward(logits: np.ndarray, target: int) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ([loss], probabilities). Loss uses log-sum-exp for stability."""
    k = logits.shape[0] if logits.ndim == 1 else -1
    if not 0 <= target < k:
        raise UsageError(f"target class {target} out of range for {k} logits")
    probs = softmax_forward(logits)
    shifted = logits - logits.max()
    loss = np.log(np.exp(shifted).sum()) - shifted[target]
    return np.array([loss], dtype=logits.dtype), probs


def cross_entropy_backward(grad: np.ndarray, probs: np.ndarray, target: int) -> np.ndarray:
    d = probs.copy()
    d[target] -= 1.0
    return d * grad[0]
