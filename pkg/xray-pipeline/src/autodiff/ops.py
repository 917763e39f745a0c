"""Elementwise and structural operations of the tape."""
from __future__ import annotations

import numpy as np

from src.autodiff.graph import Op, OpKind, register_op
from src.utils.errors import ShapeError, SizeError, UsageError


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shapes {list(a.shape)} and {list(b.shape)} differ")


@register_op
class Add(Op):
    kind = OpKind.ADD
    arity = 2

    def forward(self, inputs, attrs):
        a, b = inputs
        _same_shape(a, b)
        return a + b, None

    def backward(self, grad, inputs, output, cache, attrs):
        return [grad, grad]


@register_op
class Sub(Op):
    kind = OpKind.SUB
    arity = 2

    def forward(self, inputs, attrs):
        a, b = inputs
        _same_shape(a, b)
        return a - b, None

    def backward(self, grad, inputs, output, cache, attrs):
        return [grad, -grad]


@register_op
class Mul(Op):
    kind = OpKind.MUL
    arity = 2

    def forward(self, inputs, attrs):
        a, b = inputs
        _same_shape(a, b)
        return a * b, None

    def backward(self, grad, inputs, output, cache, attrs):
        a, b = inputs
        return [grad * b, grad * a]


@register_op
class Neg(Op):
    kind = OpKind.NEG
    arity = 1

    def forward(self, inputs, attrs):
        return -inputs[0], None

    def backward(self, grad, inputs, output, cache, attrs):
        return [-grad]


@register_op
class Scale(Op):
    kind = OpKind.SCALE
    arity = 1

    def forward(self, inputs, attrs):
        return inputs[0] * attrs["factor"], None

    def backward(self, grad, inputs, output, cache, attrs):
        return [grad * attrs["factor"]]


@register_op
class Sum(Op):
    kind = OpKind.SUM
    arity = 1

    def forward(self, inputs, attrs):
        return np.array([inputs[0].sum()], dtype=inputs[0].dtype), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [np.full(inputs[0].shape, grad[0], dtype=grad.dtype)]


@register_op
class Mean(Op):
    """Mean of scalar [1] nodes (batch loss)."""

    kind = OpKind.MEAN
    arity = None

    def forward(self, inputs, attrs):
        if not inputs:
            raise UsageError("mean needs at least one input")
        for x in inputs:
            if x.shape != (1,):
                raise ShapeError(f"mean expects scalar inputs, got {list(x.shape)}")
        return np.array([np.mean([x[0] for x in inputs])], dtype=inputs[0].dtype), None

    def backward(self, grad, inputs, output, cache, attrs):
        share = grad / len(inputs)
        return [share for _ in inputs]


@register_op
class Reshape(Op):
    kind = OpKind.RESHAPE
    arity = 1

    def forward(self, inputs, attrs):
        x = inputs[0]
        shape = attrs["shape"]
        if int(np.prod(shape)) != x.size:
            raise SizeError(f"cannot reshape {list(x.shape)} into {list(shape)}")
        return x.reshape(shape), None

    def backward(self, grad, inputs, output, cache, attrs):
        return [grad.reshape(inputs[0].shape)]


@register_op
class Select(Op):
    """Pick one element of a vector as a [1] node."""

    kind = OpKind.SELECT
    arity = 1

    def forward(self, inputs, attrs):
        x = inputs[0]
        index = attrs["index"]
        if x.ndim != 1:
            raise ShapeError(f"select expects a vector, got {list(x.shape)}")
        if not 0 <= index < x.shape[0]:
            raise UsageError(f"index {index} out of range for length {x.shape[0]}")
        return x[index : index + 1].copy(), None

    def backward(self, grad, inputs, output, cache, attrs):
        out = np.zeros_like(inputs[0])
        out[attrs["index"]] = grad[0]
        return [out]
