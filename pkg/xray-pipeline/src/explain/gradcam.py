"""
Gradient-weighted class activation mapping on the last full-resolution block.

The class logit is back-propagated to the feature block A that feeds the
head. Channel weights are the spatial means of dlogit/dA, and the map is
ReLU(sum_k w_k * A_k) scaled to a maximum of 1. The block already has the
input's resolution, so no upsampling is needed.
"""
from __future__ import annotations

import numpy as np

from src.architectures.network import ModelGraph, build_forward
from src.autodiff.tensor import Tensor
from src.explain.heatmap import HeatMap, normalize_map
from src.utils.errors import UsageError


def check_class_index(model: ModelGraph, class_index: int) -> None:
    if not 0 <= class_index < model.config.num_classes:
        raise UsageError(f"class_index {class_index} out of range for {model.config.num_classes} classes")


def class_activation(features: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """ReLU of the gradient-weighted channel sum; unnormalized."""
    weights = grads.mean(axis=(1, 2))
    return np.maximum(np.tensordot(weights, features, axes=1), 0.0)


def gradcam(model: ModelGraph, image: Tensor, class_index: int) -> HeatMap:
    check_class_index(model, class_index)
    graph, fp = build_forward(model, image)
    score = graph.select(fp.logits, class_index)
    graph.forward(score)
    graph.backward(score)

    features = fp.features.value.numpy().astype(np.float64)
    grad = fp.features.grad
    grads = grad.numpy().astype(np.float64) if grad is not None else np.zeros_like(features)
    cam = normalize_map(class_activation(features, grads))
    return HeatMap(values=Tensor.wrap(cam.astype(np.float32)), class_index=class_index, method="gradcam")
