"""
U-Net / W-Net classifiers assembled from the layer set.

Each U pass is an encoder of `depth` stages (two 3x3 conv + ReLU, then 2x2
max-pooling), a bottleneck (two conv + ReLU) and a decoder of `depth` stages
(2x nearest up-sampling, concatenation with the same-resolution encoder
output of the same U, two conv + ReLU reducing back to the skip's channel
count). A W-Net chains U passes: each U after the first reads the previous
U's full-resolution output. The last U's top block feeds the classification
head: global average pooling, then a dense layer with one unit per class.

Parameter names are stable:
    u{p}.enc{l}.conv{1,2}.{weight,bias}
    u{p}.bottleneck.conv{1,2}.{weight,bias}
    u{p}.dec{l}.conv{1,2}.{weight,bias}
    head.dense.{weight,bias}
with p counted from 1 and l from 0 (full resolution).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.architectures.config import ModelConfig
from src.autodiff.graph import Graph, Node
from src.autodiff.rng import Rng
from src.autodiff.tensor import DType, Tensor
from src.layers import ops as L
from src.layers.kernels import KERNEL
from src.layers.params import init_conv, init_dense
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

StageShape = Tuple[int, int, int]


def stage_shapes(config: ModelConfig) -> List[StageShape]:
    """Encoder stage shapes (channels, H, W) followed by the bottleneck shape."""
    shapes = []
    for level in range(config.depth):
        side = config.input_size // 2**level
        shapes.append((config.level_channels(level), side, side))
    shapes.append((config.bottleneck_channels, config.bottleneck_size, config.bottleneck_size))
    return shapes


def decoder_shapes(config: ModelConfig) -> List[Tuple[int, StageShape]]:
    """(concatenated channels, output shape) per decoder stage, deepest first."""
    out = []
    incoming = config.bottleneck_channels
    for level in reversed(range(config.depth)):
        side = config.input_size // 2**level
        skip = config.level_channels(level)
        out.append((incoming + skip, (skip, side, side)))
        incoming = skip
    return out


def conv_inventory(config: ModelConfig) -> List[Tuple[str, int, int]]:
    """(name prefix, in_channels, out_channels) for every convolution, in build order."""
    convs = []
    for p in range(1, config.u_passes + 1):
        in_ch = config.input_channels if p == 1 else config.base_channels
        for level in range(config.depth):
            out_ch = config.level_channels(level)
            convs.append((f"u{p}.enc{level}.conv1", in_ch, out_ch))
            convs.append((f"u{p}.enc{level}.conv2", out_ch, out_ch))
            in_ch = out_ch
        c_b = config.bottleneck_channels
        convs.append((f"u{p}.bottleneck.conv1", in_ch, c_b))
        convs.append((f"u{p}.bottleneck.conv2", c_b, c_b))
        for (concat_ch, (skip, _, _)), level in zip(decoder_shapes(config), reversed(range(config.depth))):
            convs.append((f"u{p}.dec{level}.conv1", concat_ch, skip))
            convs.append((f"u{p}.dec{level}.conv2", skip, skip))
    return convs


def head_input_channels(config: ModelConfig) -> int:
    return config.base_channels if config.depth > 0 else config.bottleneck_channels


def parameter_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Ordered name -> shape inventory, in initialization order."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    for prefix, in_ch, out_ch in conv_inventory(config):
        shapes[f"{prefix}.weight"] = (out_ch, in_ch, KERNEL, KERNEL)
        shapes[f"{prefix}.bias"] = (out_ch,)
    shapes["head.dense.weight"] = (config.num_classes, head_input_channels(config))
    shapes["head.dense.bias"] = (config.num_classes,)
    return shapes


def parameter_count(config: ModelConfig) -> int:
    total = sum(out * inp * KERNEL * KERNEL + out for _, inp, out in conv_inventory(config))
    return total + config.num_classes * head_input_channels(config) + config.num_classes


@dataclass
class ModelGraph:
    config: ModelConfig
    parameters: Dict[str, Tensor]
    stage_shapes: List[StageShape]
    dtype: DType = DType.FLOAT32

    @property
    def parameter_count(self) -> int:
        return int(sum(t.size for t in self.parameters.values()))

    def with_parameters(self, parameters: Dict[str, Tensor]) -> "ModelGraph":
        if list(parameters) != list(self.parameters):
            raise ShapeError("Parameter names differ from the model's inventory")
        for name, t in parameters.items():
            if t.shape != self.parameters[name].shape:
                raise ShapeError(
                    f"Parameter {name} has shape {list(t.shape)}, expected {list(self.parameters[name].shape)}"
                )
        return ModelGraph(self.config, dict(parameters), list(self.stage_shapes), self.dtype)


def build_model(config: ModelConfig, rng: Optional[Rng] = None, dtype: DType = DType.FLOAT32) -> ModelGraph:
    """Instantiate parameters: He-normal weights (std sqrt(2/fan_in)), zero biases."""
    rng = rng if rng is not None else Rng(config.seed)
    parameters: Dict[str, Tensor] = {}
    for prefix, in_ch, out_ch in conv_inventory(config):
        conv = init_conv(rng, in_ch, out_ch, dtype)
        parameters[f"{prefix}.weight"] = conv.weights
        parameters[f"{prefix}.bias"] = conv.bias
    head = init_dense(rng, head_input_channels(config), config.num_classes, dtype)
    parameters["head.dense.weight"] = head.weights
    parameters["head.dense.bias"] = head.bias

    model = ModelGraph(config=config, parameters=parameters, stage_shapes=stage_shapes(config), dtype=dtype)
    logger.info(
        f"Built {config.arch} (u_passes={config.u_passes}, depth={config.depth}, "
        f"base={config.base_channels}, classes={config.num_classes}): "
        f"{len(parameters)} tensors, {model.parameter_count} parameters"
    )
    return model


@dataclass
class ForwardPass:
    """Nodes of one image's forward pass inside a graph."""

    image: Node
    logits: Node
    features: Node  # last U's full-resolution block, input of the head
    stages: List[List[Node]] = field(default_factory=list)  # per U: encoder outputs + bottleneck
    decoders: List[List[Tuple[Node, Node]]] = field(default_factory=list)  # per U: (concat, output), deepest first


def parameter_leaves(graph: Graph, model: ModelGraph) -> Dict[str, Node]:
    return {name: graph.leaf(t, name=name) for name, t in model.parameters.items()}


def _conv_relu(graph: Graph, x: Node, params: Dict[str, Node], prefix: str) -> Node:
    y = L.conv2d_same(graph, x, params[f"{prefix}.weight"], params[f"{prefix}.bias"], name=prefix)
    return L.relu(graph, y)


def wire_forward(graph: Graph, model: ModelGraph, params: Dict[str, Node], image: Node) -> ForwardPass:
    """Add one image's forward pass to `graph`, reading weights from `params`."""
    config = model.config
    x = image
    stages: List[List[Node]] = []
    decoders: List[List[Tuple[Node, Node]]] = []
    for p in range(1, config.u_passes + 1):
        skips: List[Node] = []
        realized: List[Node] = []
        for level in range(config.depth):
            x = _conv_relu(graph, x, params, f"u{p}.enc{level}.conv1")
            x = _conv_relu(graph, x, params, f"u{p}.enc{level}.conv2")
            skips.append(x)
            realized.append(x)
            x = L.maxpool2x2(graph, x)
        x = _conv_relu(graph, x, params, f"u{p}.bottleneck.conv1")
        x = _conv_relu(graph, x, params, f"u{p}.bottleneck.conv2")
        realized.append(x)
        unwound: List[Tuple[Node, Node]] = []
        for level in reversed(range(config.depth)):
            up = L.upsample2x(graph, x)
            concat = L.concat_channels(graph, up, skips[level], name=f"u{p}.dec{level}.concat")
            x = _conv_relu(graph, concat, params, f"u{p}.dec{level}.conv1")
            x = _conv_relu(graph, x, params, f"u{p}.dec{level}.conv2")
            unwound.append((concat, x))
        stages.append(realized)
        decoders.append(unwound)
    features = x
    pooled = L.global_avg_pool(graph, features)
    logits = L.dense(graph, pooled, params["head.dense.weight"], params["head.dense.bias"], name="logits")
    return ForwardPass(image=image, logits=logits, features=features, stages=stages, decoders=decoders)


def _check_image(model: ModelGraph, image: Tensor) -> None:
    c = model.config
    expected = (c.input_channels, c.input_size, c.input_size)
    if image.shape != expected:
        raise ShapeError(f"Image shape {list(image.shape)} does not match model input {list(expected)}")


def build_forward(model: ModelGraph, image: Tensor) -> Tuple[Graph, ForwardPass]:
    """Wire (but do not run) the network on one image in a fresh graph."""
    _check_image(model, image)
    graph = Graph(model.dtype)
    params = parameter_leaves(graph, model)
    fp = wire_forward(graph, model, params, graph.leaf(image, name="image"))
    return graph, fp


def forward_logits(model: ModelGraph, image: Tensor) -> Tuple[Graph, ForwardPass]:
    """Run the network on one image; returns the evaluated graph and its nodes."""
    graph, fp = build_forward(model, image)
    graph.forward(fp.logits)
    return graph, fp


def forward_classify(model: ModelGraph, image: Tensor) -> Tensor:
    """Class probabilities for one [C, S, S] image."""
    graph, fp = build_forward(model, image)
    probs = L.softmax(graph, fp.logits)
    return graph.forward(probs)


def predict_batch(model: ModelGraph, images: List[Tensor]) -> np.ndarray:
    """Probabilities for many images as an [n, num_classes] float64 array."""
    if not images:
        return np.zeros((0, model.config.num_classes))
    return np.stack([forward_classify(model, img).numpy().astype(np.float64) for img in images])


def describe(model_or_config) -> str:
    """Text rendering of the ladder: stage shapes, decoder concats, parameter inventory."""
    config = model_or_config.config if isinstance(model_or_config, ModelGraph) else model_or_config
    lines = [
        f"arch: {config.arch}  u_passes: {config.u_passes}  classes: {config.num_classes}",
        f"input: ({config.input_channels}, {config.input_size}, {config.input_size})",
        "encoder stages:",
    ]
    shapes = stage_shapes(config)
    for level, shape in enumerate(shapes[:-1]):
        lines.append(f"  level {level}: {shape}")
    lines.append(f"bottleneck: {shapes[-1]}")
    lines.append("decoder stages:")
    for concat_ch, shape in decoder_shapes(config):
        lines.append(f"  concat {concat_ch} -> {shape}")
    lines.append(f"head: global_avg_pool({head_input_channels(config)}) -> dense({config.num_classes})")
    lines.append(f"conv layers: {len(conv_inventory(config))}")
    lines.append(f"parameter tensors: {2 * len(conv_inventory(config)) + 2}")
    lines.append(f"total parameters: {parameter_count(config)}")
    return "\n".join(lines)
