from src.architectures.config import ModelConfig
from src.architectures.network import (
    ForwardPass,
    ModelGraph,
    build_forward,
    build_model,
    describe,
    forward_classify,
    forward_logits,
    parameter_count,
    parameter_shapes,
    predict_batch,
    stage_shapes,
)
from src.architectures.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ModelConfig",
    "ModelGraph",
    "ForwardPass",
    "build_forward",
    "build_model",
    "describe",
    "forward_classify",
    "forward_logits",
    "parameter_count",
    "parameter_shapes",
    "predict_batch",
    "stage_shapes",
    "load_checkpoint",
    "save_checkpoint",
]
