from src.autodiff.tensor import DType, Tensor, tensor_create, zeros, ones, zeros_like
from src.autodiff.rng import Rng, rng_fill_normal
from src.autodiff.graph import Graph, Node, OpKind, tape_forward, tape_backward, gradient_check
from src.autodiff import ops  # noqa: F401  registers elementwise ops

__all__ = [
    "DType",
    "Tensor",
    "tensor_create",
    "zeros",
    "ones",
    "zeros_like",
    "Rng",
    "rng_fill_normal",
    "Graph",
    "Node",
    "OpKind",
    "tape_forward",
    "tape_backward",
    "gradient_check",
]
