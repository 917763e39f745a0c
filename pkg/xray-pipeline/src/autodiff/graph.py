"""
Reverse-mode automatic differentiation over a linear tape.

A Graph is a list of Nodes in creation order. Creation order is a
topological order because a node can only name parents that already exist.
Leaves hold values supplied by the caller; every other node is computed by
the Op registered for its OpKind.

    g = Graph()
    x = g.leaf(tensor_create([3], [1, 2, 3]))
    out = g.sum(g.mul(x, x))
    g.forward(out)           # Tensor([14])
    grads = g.backward(out)  # {x.id: Tensor([2, 4, 6])}

A Graph is not thread-safe; use one Graph per thread.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff.tensor import DType, Tensor
from src.utils.errors import ShapeError, UsageError


class OpKind(str, Enum):
    LEAF = "leaf"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    NEG = "neg"
    SCALE = "scale"
    SUM = "sum"
    MEAN = "mean"
    RESHAPE = "reshape"
    SELECT = "select"
    CONV2D = "conv2d_same"
    RELU = "relu"
    MAXPOOL = "maxpool2x2"
    UPSAMPLE = "upsample2x"
    CONCAT = "concat_channels"
    GAP = "global_avg_pool"
    DENSE = "dense"
    SOFTMAX = "softmax"
    SOFTMAX_XENT = "softmax_cross_entropy"


@dataclass
class Node:
    id: int
    op: OpKind
    parents: Tuple[int, ...]
    value: Optional[Tensor] = None
    grad: Optional[Tensor] = None
    attrs: Dict[str, Any] = field(default_factory=dict)
    cache: Any = None
    name: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.op is OpKind.LEAF

    def __repr__(self) -> str:
        label = f" '{self.name}'" if self.name else ""
        return f"Node({self.id}{label}, {self.op.value}, parents={list(self.parents)})"


class Op(ABC):
    """Forward/backward pair for one OpKind, working on raw numpy arrays."""

    kind: OpKind
    arity: Optional[int] = None  # None means variadic

    @abstractmethod
    def forward(self, inputs: List[np.ndarray], attrs: Dict[str, Any]) -> Tuple[np.ndarray, Any]:
        """Return (output, cache)."""

    @abstractmethod
    def backward(
        self,
        grad: np.ndarray,
        inputs: List[np.ndarray],
        output: np.ndarray,
        cache: Any,
        attrs: Dict[str, Any],
    ) -> List[Optional[np.ndarray]]:
        """Return one gradient per input (None for no contribution)."""


OP_REGISTRY: Dict[OpKind, Op] = {}


def register_op(cls):
    """Class decorator adding an Op instance to the registry."""
    OP_REGISTRY[cls.kind] = cls()
    return cls


NodeRef = Union[Node, int]


class Graph:
    def __init__(self, dtype: DType = DType.FLOAT32):
        self.dtype = DType.of(dtype)
        self.nodes: List[Node] = []
        self._forward_done_upto = -1

    # ----- construction -----

    def _id(self, ref: NodeRef) -> int:
        node_id = ref.id if isinstance(ref, Node) else int(ref)
        if not 0 <= node_id < len(self.nodes):
            raise UsageError(f"Unknown node id {node_id}")
        return node_id

    def node(self, ref: NodeRef) -> Node:
        return self.nodes[self._id(ref)]

    def leaf(self, value: Tensor, name: Optional[str] = None) -> Node:
        node = Node(id=len(self.nodes), op=OpKind.LEAF, parents=(), value=self._coerce(value), name=name)
        self.nodes.append(node)
        return node

    def apply(self, kind: OpKind, *parents: NodeRef, name: Optional[str] = None, **attrs: Any) -> Node:
        op = OP_REGISTRY.get(kind)
        if op is None:
            raise UsageError(f"No operation registered for {kind}")
        if op.arity is not None and len(parents) != op.arity:
            raise UsageError(f"{kind.value} takes {op.arity} inputs, got {len(parents)}")
        parent_ids = tuple(self._id(p) for p in parents)
        node = Node(id=len(self.nodes), op=kind, parents=parent_ids, attrs=dict(attrs), name=name)
        self.nodes.append(node)
        return node

    def set_leaf(self, ref: NodeRef, value: Tensor) -> None:
        node = self.node(ref)
        if not node.is_leaf:
            raise UsageError(f"{node} is not a leaf")
        node.value = self._coerce(value)
        self._forward_done_upto = -1

    def _coerce(self, value: Tensor) -> Tensor:
        if not isinstance(value, Tensor):
            value = Tensor(value, dtype=self.dtype)
        if value.dtype != self.dtype:
            value = value.astype(self.dtype)
        return value

    @property
    def leaves(self) -> List[Node]:
        return [n for n in self.nodes if n.is_leaf]

    def value(self, ref: NodeRef) -> Tensor:
        node = self.node(ref)
        if node.value is None:
            raise UsageError(f"{node} has no value; run forward first")
        return node.value

    # ----- elementwise / structural conveniences -----

    def add(self, a: NodeRef, b: NodeRef) -> Node:
        return self.apply(OpKind.ADD, a, b)

    def sub(self, a: NodeRef, b: NodeRef) -> Node:
        return self.apply(OpKind.SUB, a, b)

    def mul(self, a: NodeRef, b: NodeRef) -> Node:
        return self.apply(OpKind.MUL, a, b)

    def neg(self, a: NodeRef) -> Node:
        return self.apply(OpKind.NEG, a)

    def scale(self, a: NodeRef, factor: float) -> Node:
        return self.apply(OpKind.SCALE, a, factor=float(factor))

    def sum(self, a: NodeRef) -> Node:
        return self.apply(OpKind.SUM, a)

    def mean(self, items: Sequence[NodeRef]) -> Node:
        return self.apply(OpKind.MEAN, *items)

    def reshape(self, a: NodeRef, shape: Sequence[int]) -> Node:
        return self.apply(OpKind.RESHAPE, a, shape=tuple(int(d) for d in shape))

    def select(self, a: NodeRef, index: int) -> Node:
        return self.apply(OpKind.SELECT, a, index=int(index))

    # ----- execution -----

    def forward(self, output: Optional[NodeRef] = None) -> Tensor:
        """Evaluate every node up to `output` (default: the last node)."""
        if not self.nodes:
            raise UsageError("Cannot run forward on an empty graph")
        out_id = self._id(output) if output is not None else len(self.nodes) - 1
        for node in self.nodes[: out_id + 1]:
            if node.is_leaf:
                if node.value is None:
                    raise UsageError(f"Leaf {node} has no value")
                continue
            op = OP_REGISTRY[node.op]
            inputs = [self.nodes[p].value.numpy() for p in node.parents]
            try:
                result, cache = op.forward(inputs, node.attrs)
            except ShapeError as e:
                names = " and ".join(repr(self.nodes[p]) for p in node.parents)
                raise ShapeError(f"{node.op.value} node {node.id} cannot combine {names}: {e}") from e
            node.value = Tensor.wrap(result.astype(self.dtype.numpy, copy=False))
            node.cache = cache
            node.grad = None
        self._forward_done_upto = max(self._forward_done_upto, out_id)
        return self.nodes[out_id].value

    def backward(self, output: NodeRef) -> Dict[int, Tensor]:
        """
        Propagate d(output)/d(node) to every node up to `output`.

        Returns the gradient of every leaf, keyed by node id. Leaves the
        output does not depend on get explicit zero tensors.
        """
        out_id = self._id(output)
        if out_id > self._forward_done_upto:
            raise UsageError("Run forward before backward")
        out_node = self.nodes[out_id]
        if out_node.value.shape != (1,):
            raise UsageError(f"Backward needs a scalar output of shape [1], got {list(out_node.value.shape)}")

        np_dtype = self.dtype.numpy
        grads: Dict[int, np.ndarray] = {out_id: np.ones((1,), dtype=np_dtype)}
        for node in reversed(self.nodes[: out_id + 1]):
            grad = grads.get(node.id)
            if grad is None:
                node.grad = None
                continue
            node.grad = Tensor.wrap(grad)
            if node.is_leaf:
                continue
            op = OP_REGISTRY[node.op]
            inputs = [self.nodes[p].value.numpy() for p in node.parents]
            parent_grads = op.backward(grad, inputs, node.value.numpy(), node.cache, node.attrs)
            for pid, pgrad in zip(node.parents, parent_grads):
                if pgrad is None:
                    continue
                pgrad = np.asarray(pgrad, dtype=np_dtype)
                if pid in grads:
                    grads[pid] = grads[pid] + pgrad
                else:
                    grads[pid] = pgrad

        leaf_grads: Dict[int, Tensor] = {}
        for node in self.nodes:
            if not node.is_leaf:
                continue
            if node.grad is None or node.id > out_id:
                node.grad = Tensor.wrap(np.zeros(node.value.shape, dtype=np_dtype))
            leaf_grads[node.id] = node.grad
        return leaf_grads


def tape_forward(graph: Graph, output: Optional[NodeRef] = None) -> Tensor:
    return graph.forward(output)


def tape_backward(graph: Graph, output: NodeRef) -> Dict[int, Tensor]:
    return graph.backward(output)


def gradient_check(
    build: Callable[[Graph, Dict[str, Node]], Node],
    inputs: Dict[str, np.ndarray],
    h: float = 1e-5,
    max_checks: Optional[int] = None,
    seed: int = 0,
    floor: float = 1e-5,
) -> float:
    """
    Compare analytic gradients with central finite differences in float64.

    `build(graph, leaves)` must add operations on the given leaves and return
    a scalar node. Returns the maximum over checked coordinates of
    |analytic - numeric| / max(|analytic|, |numeric|, floor).
    With `max_checks`, only that many randomly chosen coordinates per input
    are perturbed.
    """
    graph = Graph(DType.FLOAT64)
    leaves = {name: graph.leaf(Tensor(arr, DType.FLOAT64), name=name) for name, arr in inputs.items()}
    out = build(graph, leaves)
    graph.forward(out)
    analytic = graph.backward(out)

    picker = np.random.default_rng(seed)
    worst = 0.0
    for name, leaf in leaves.items():
        base = np.array(inputs[name], dtype=np.float64)
        flat = base.reshape(-1)
        coords = np.arange(flat.size)
        if max_checks is not None and flat.size > max_checks:
            coords = picker.choice(flat.size, size=max_checks, replace=False)
        grad = analytic[leaf.id].numpy().reshape(-1)
        for i in coords:
            original = flat[i]
            flat[i] = original + h
            graph.set_leaf(leaf, Tensor(base, DType.FLOAT64))
            plus = graph.forward(out).item()
            flat[i] = original - h
            graph.set_leaf(leaf, Tensor(base, DType.FLOAT64))
            minus = graph.forward(out).item()
            flat[i] = original
            numeric = (plus - minus) / (2.0 * h)
            denom = max(abs(grad[i]), abs(numeric), floor)
            worst = max(worst, abs(grad[i] - numeric) / denom)
        graph.set_leaf(leaf, Tensor(base, DType.FLOAT64))
    return worst
