"""
Adam with bias-corrected moments.

    m <- b1*m + (1-b1)*g
    v <- b2*v + (1-b2)*g^2
    theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

Moments are kept in float64 whatever the parameter element type; updated
parameters are cast back to their own type.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from src.autodiff.tensor import Tensor
from src.training.config import TrainConfig
from src.utils.errors import ShapeError


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_parameters(cls, params: Mapping[str, Tensor]) -> "AdamState":
        return cls(
            m={k: np.zeros(p.shape) for k, p in params.items()},
            v={k: np.zeros(p.shape) for k, p in params.items()},
        )


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Tensor],
    state: AdamState,
    cfg: TrainConfig,
) -> Tuple[Dict[str, Tensor], AdamState]:
    """One optimizer step. Returns new parameters and the advanced state."""
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            raise ShapeError(f"No gradient for parameter {name}")
        if g.shape != p.shape:
            raise ShapeError(f"Gradient of {name} has shape {list(g.shape)}, parameter has {list(p.shape)}")
        if name in state.m and state.m[name].shape != p.shape:
            raise ShapeError(f"Optimizer state of {name} has shape {list(state.m[name].shape)}")

    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t

    new_params: Dict[str, Tensor] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, p in params.items():
        g = grads[name].numpy().astype(np.float64)
        m = b1 * state.m.get(name, 0.0) + (1.0 - b1) * g
        v = b2 * state.v.get(name, 0.0) + (1.0 - b2) * (g * g)
        theta = p.numpy().astype(np.float64) - cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
        new_params[name] = Tensor.wrap(theta.astype(p.dtype.numpy))
        new_m[name] = np.asarray(m, dtype=np.float64)
        new_v[name] = np.asarray(v, dtype=np.float64)
    return new_params, AdamState(m=new_m, v=new_v, t=t)
