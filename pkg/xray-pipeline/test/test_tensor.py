# test/test_tensor.py
import numpy as np
import pytest

from src.autodiff import DType, Rng, Tensor, ones, tensor_create, zeros, zeros_like
from src.utils.errors import ParameterError, ShapeError, SizeError, UsageError


def test_create_from_scalar_fill():
    t = tensor_create([2, 3], 1.5)
    assert t.shape == (2, 3)
    assert t.dtype is DType.FLOAT32
    assert np.all(t.numpy() == 1.5)


def test_create_from_buffer_is_row_major():
    t = tensor_create([2, 3], [0, 1, 2, 3, 4, 5])
    assert t.strides == (3, 1)
    assert t[[1, 2]] == 5.0
    assert t.offset([1, 0]) == 3


@pytest.mark.parametrize("shape,buffer", [([2, 3], [1, 2, 3]), ([4], list(range(5)))])
def test_create_rejects_wrong_buffer_length(shape, buffer):
    with pytest.raises(SizeError):
        tensor_create(shape, buffer)


@pytest.mark.parametrize("shape", [[], [0], [3, 0, 2], [-1]])
def test_create_rejects_bad_shapes(shape):
    with pytest.raises(ShapeError):
        tensor_create(shape, 0.0)


def test_tensor_buffer_is_read_only():
    t = zeros([3])
    with pytest.raises(ValueError):
        t.numpy()[0] = 1.0


def test_tensor_copies_its_input():
    source = np.ones(4, dtype=np.float32)
    t = Tensor(source)
    source[0] = 7.0
    assert t[[0]] == 1.0


def test_out_of_bounds_index():
    t = ones([2, 2])
    with pytest.raises(UsageError):
        t[[2, 0]]
    with pytest.raises(UsageError):
        t[[0]]


def test_reshape_round_trip():
    t = tensor_create([2, 3, 4], np.arange(24))
    back = t.reshape([6, 4]).reshape([2, 3, 4])
    assert back.equals(t)
    with pytest.raises(SizeError):
        t.reshape([5, 5])


def test_float64_tensors_and_conversion():
    t = zeros([2], dtype="float64")
    assert t.dtype is DType.FLOAT64
    assert t.astype(DType.FLOAT32).dtype is DType.FLOAT32
    assert zeros_like(t).dtype is DType.FLOAT64
    with pytest.raises(UsageError):
        zeros([2], dtype="int32")


def test_equals_compares_dtype_and_bits():
    a = tensor_create([3], [1, 2, 3])
    assert a.equals(tensor_create([3], [1, 2, 3]))
    assert not a.equals(tensor_create([3], [1, 2, 3], dtype="float64"))
    assert not a.equals(tensor_create([3], [1, 2, 4]))


def test_rng_same_seed_same_stream():
    a = Rng(42).fill_normal([16, 16], 0.0, 1.0)
    b = Rng(42).fill_normal([16, 16], 0.0, 1.0)
    c = Rng(43).fill_normal([16, 16], 0.0, 1.0)
    assert a.equals(b)
    assert not a.equals(c)


def test_rng_float32_and_float64_share_a_stream():
    a = Rng(9).fill_normal([50], 0.0, 1.0, DType.FLOAT64).numpy()
    b = Rng(9).fill_normal([50], 0.0, 1.0, DType.FLOAT32).numpy()
    assert np.allclose(a.astype(np.float32), b)


def test_rng_statistics():
    values = Rng(7).fill_normal([10000], 0.0, 1.0).numpy().astype(np.float64)
    assert -0.05 <= values.mean() <= 0.05
    assert 0.95 <= values.std() <= 1.05
    print(f"✓ mean {values.mean():.4f}, std {values.std():.4f}")


def test_rng_rejects_non_positive_std():
    with pytest.raises(ParameterError):
        Rng(0).fill_normal([2], 0.0, 0.0)


def test_rng_spawn_is_deterministic_and_leaves_parent_alone():
    parent = Rng(5)
    child_a = parent.spawn(1)
    child_b = Rng(5).spawn(1)
    assert child_a.seed == child_b.seed
    assert parent.calls == 0
    assert Rng(5).spawn(2).seed != child_a.seed


def test_rng_permutation_is_a_permutation():
    order = Rng(3).permutation(20)
    assert sorted(order.tolist()) == list(range(20))
    assert np.array_equal(order, Rng(3).permutation(20))
