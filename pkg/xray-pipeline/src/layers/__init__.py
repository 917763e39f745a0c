from src.layers import ops  # noqa: F401  registers layer ops
from src.layers.params import ConvParams, DenseParams, init_conv, init_dense

__all__ = ["ConvParams", "DenseParams", "init_conv", "init_dense"]
