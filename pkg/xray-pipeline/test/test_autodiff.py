# test/test_autodiff.py
import numpy as np
import pytest

from src.autodiff import DType, Graph, gradient_check, tensor_create
from src.utils.errors import ShapeError, UsageError

GRAD_TOL = 1e-4


def test_sum_of_squares_forward_and_backward():
    g = Graph()
    x = g.leaf(tensor_create([3], [1, 2, 3]))
    out = g.sum(g.mul(x, x))
    assert g.forward(out).item() == 14.0
    grads = g.backward(out)
    assert np.allclose(grads[x.id].numpy(), [2, 4, 6])


def test_backward_sets_intermediate_gradients():
    g = Graph(DType.FLOAT64)
    x = g.leaf(tensor_create([2], [3, 4], dtype="float64"))
    doubled = g.scale(x, 2.0)
    out = g.sum(doubled)
    g.forward(out)
    g.backward(out)
    assert np.allclose(doubled.grad.numpy(), [1, 1])
    assert np.allclose(x.grad.numpy(), [2, 2])


def test_fan_out_accumulates_gradients():
    g = Graph(DType.FLOAT64)
    x = g.leaf(tensor_create([2], [1, -2], dtype="float64"))
    out = g.sum(g.add(x, g.add(x, x)))
    g.forward(out)
    assert np.allclose(g.backward(out)[x.id].numpy(), [3, 3])


def test_unused_leaf_gets_zero_gradient():
    g = Graph()
    x = g.leaf(tensor_create([2], [1, 2]))
    unused = g.leaf(tensor_create([3], [1, 2, 3]))
    out = g.sum(x)
    g.forward(out)
    grads = g.backward(out)
    assert np.all(grads[unused.id].numpy() == 0)


def test_backward_requires_scalar_output():
    g = Graph()
    x = g.leaf(tensor_create([2], [1, 2]))
    y = g.scale(x, 3.0)
    g.forward(y)
    with pytest.raises(UsageError):
        g.backward(y)


def test_backward_requires_forward():
    g = Graph()
    x = g.leaf(tensor_create([2], [1, 2]))
    out = g.sum(x)
    with pytest.raises(UsageError):
        g.backward(out)


def test_shape_mismatch_is_reported_at_forward():
    g = Graph()
    a = g.leaf(tensor_create([2], [1, 2]))
    b = g.leaf(tensor_create([3], [1, 2, 3]))
    out = g.add(a, b)
    with pytest.raises(ShapeError):
        g.forward(out)


def test_set_leaf_reruns_forward():
    g = Graph()
    x = g.leaf(tensor_create([2], [1, 1]))
    out = g.sum(g.mul(x, x))
    assert g.forward(out).item() == 2.0
    g.set_leaf(x, tensor_create([2], [2, 3]))
    assert g.forward(out).item() == 13.0
    with pytest.raises(UsageError):
        g.set_leaf(out, tensor_create([1], [0]))


def test_select_and_mean():
    g = Graph(DType.FLOAT64)
    v = g.leaf(tensor_create([3], [5, 6, 7], dtype="float64"))
    picks = [g.select(v, 0), g.select(v, 2)]
    out = g.mean(picks)
    assert g.forward(out).item() == 6.0
    assert np.allclose(g.backward(out)[v.id].numpy(), [0.5, 0, 0.5])


def test_reshape_gradient_keeps_input_shape():
    g = Graph(DType.FLOAT64)
    x = g.leaf(tensor_create([2, 3], np.arange(6), dtype="float64"))
    out = g.sum(g.reshape(x, [3, 2]))
    g.forward(out)
    assert g.backward(out)[x.id].shape == (2, 3)


def test_leaf_values_are_coerced_to_graph_dtype():
    g = Graph(DType.FLOAT64)
    x = g.leaf(tensor_create([2], [1, 2]))
    assert x.value.dtype is DType.FLOAT64


@pytest.mark.parametrize("seed", range(20))
def test_elementwise_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    inputs = {"a": rng.uniform(-1, 1, (3, 4)), "b": rng.uniform(-1, 1, (3, 4))}

    def build(g, leaves):
        a, b = leaves["a"], leaves["b"]
        mixed = g.sub(g.mul(a, b), g.scale(g.neg(a), 0.5))
        return g.sum(g.mul(mixed, g.reshape(g.add(a, b), [3, 4])))

    err = gradient_check(build, inputs)
    assert err < GRAD_TOL, f"relative error {err}"
    print(f"✓ seed {seed}: max relative error {err:.2e}")


def _random_dag(g, leaves, rng, steps=8):
    """Scalar built from `leaves` by a seeded sequence of elementwise ops."""
    pool = list(leaves)
    for _ in range(steps):
        a, b = (pool[i] for i in rng.integers(0, len(pool), 2))
        op = rng.integers(0, 4)
        if op == 0:
            pool.append(g.add(a, b))
        elif op == 1:
            pool.append(g.sub(a, b))
        elif op == 2:
            pool.append(g.mul(a, b))
        else:
            pool.append(g.scale(g.neg(a), float(rng.uniform(0.5, 2.0))))
    return g.sum(pool[-1])


@pytest.mark.parametrize("seed", range(20))
def test_backward_is_linear_in_the_output(seed):
    rng = np.random.default_rng(seed)
    values = [rng.uniform(-1, 1, 4) for _ in range(3)]
    alpha, beta = rng.uniform(-2, 2, 2)

    def gradients(combine):
        g = Graph(DType.FLOAT64)
        leaves = [g.leaf(tensor_create([4], v, dtype="float64")) for v in values]
        f = _random_dag(g, leaves, np.random.default_rng(seed))
        h = _random_dag(g, leaves, np.random.default_rng(seed + 1000))
        out = combine(g, f, h)
        g.forward(out)
        grads = g.backward(out)
        return [grads[leaf.id].numpy() for leaf in leaves]

    grad_f = gradients(lambda g, f, h: f)
    grad_h = gradients(lambda g, f, h: h)
    grad_mix = gradients(lambda g, f, h: g.add(g.scale(f, float(alpha)), g.scale(h, float(beta))))
    for df, dh, dmix in zip(grad_f, grad_h, grad_mix):
        assert np.allclose(dmix, alpha * df + beta * dh, rtol=1e-10, atol=1e-12)
