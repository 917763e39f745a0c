"""Graph operations for the layer set, plus node-level builders."""
from __future__ import annotations

from typing import Optional

from src.autodiff.graph import Graph, Node, NodeRef, Op, OpKind, register_op
from src.layers import kernels


@register_op
class Conv2dSame(Op):
    kind = OpKind.CONV2D
    arity = 3

    def forward(self, inputs, attrs):
        x, weight, bias = inputs
        return kernels.conv2d_forward(x, weight, bias)

    def backward(self, grad, inputs, output, cache, attrs):
        _, weight, _ = inputs
        return list(kernels.conv2d_backward(grad, cache, weight))


@register_op
class Relu(Op):
    kind = OpKind.RELU
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.relu_forward(inputs[0]), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.relu_backward(grad, inputs[0])]


@register_op
class MaxPool2x2(Op):
    kind = OpKind.MAXPOOL
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.maxpool_forward(inputs[0])

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.maxpool_backward(grad, cache)]


@register_op
class Upsample2x(Op):
    kind = OpKind.UPSAMPLE
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.upsample_forward(inputs[0]), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.upsample_backward(grad)]


@register_op
class ConcatChannels(Op):
    kind = OpKind.CONCAT
    arity = 2

    def forward(self, inputs, attrs):
        a, b = inputs
        return kernels.concat_forward(a, b), None

    def backward(self, grad, inputs, output, cache, attrs):
        return list(kernels.concat_backward(grad, inputs[0].shape[0]))


@register_op
class GlobalAvgPool(Op):
    kind = OpKind.GAP
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.gap_forward(inputs[0]), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.gap_backward(grad, inputs[0].shape)]


@register_op
class Dense(Op):
    kind = OpKind.DENSE
    arity = 3

    def forward(self, inputs, attrs):
        x, weight, bias = inputs
        return kernels.dense_forward(x, weight, bias), None

    def backward(self, grad, inputs, output, cache, attrs):
        x, weight, _ = inputs
        return list(kernels.dense_backward(grad, x, weight))


@register_op
class Softmax(Op):
    kind = OpKind.SOFTMAX
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.softmax_forward(inputs[0]), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.softmax_backward(grad, output)]


@register_op
class SoftmaxCrossEntropy(Op):
    """Fused softmax + categorical cross-entropy; cache holds the probabilities."""

    kind = OpKind.SOFTMAX_XENT
    arity = 1

    def forward(self, inputs, attrs):
        return kernels.cross_entropy_forward(inputs[0], attrs["target"])

    def backward(self, grad, inputs, output, cache, attrs):
        return [kernels.cross_entropy_backward(grad, cache, attrs["target"])]


def conv2d_same(graph: Graph, x: NodeRef, weight: NodeRef, bias: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.CONV2D, x, weight, bias, name=name)


def relu(graph: Graph, x: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.RELU, x, name=name)


def maxpool2x2(graph: Graph, x: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.MAXPOOL, x, name=name)


def upsample2x(graph: Graph, x: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.UPSAMPLE, x, name=name)


def concat_channels(graph: Graph, a: NodeRef, b: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.CONCAT, a, b, name=name)


def global_avg_pool(graph: Graph, x: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.GAP, x, name=name)


def dense(graph: Graph, x: NodeRef, weight: NodeRef, bias: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.DENSE, x, weight, bias, name=name)


def softmax(graph: Graph, logits: NodeRef, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.SOFTMAX, logits, name=name)


def softmax_cross_entropy(graph: Graph, logits: NodeRef, target: int, name: Optional[str] = None) -> Node:
    return graph.apply(OpKind.SOFTMAX_XENT, logits, target=int(target), name=name)
