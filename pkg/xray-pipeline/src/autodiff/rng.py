"""
Deterministic random streams.

Rng wraps numpy's Philox4x64-10 counter-based bit generator. The key is the
64-bit seed; every draw advances the 256-bit counter, so an identical seed
followed by an identical call sequence reproduces the same stream on every
platform. Child streams from spawn() use the key derived from
(seed, child key) through numpy's SeedSequence, leaving the parent untouched.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from src.autodiff.tensor import DType, Tensor
from src.utils.errors import ParameterError

_SEED_MASK = (1 << 64) - 1


class Rng:
    def __init__(self, seed: int):
        self.seed = int(seed) & _SEED_MASK
        self.calls = 0
        self._generator = np.random.Generator(np.random.Philox(key=self.seed))

    def fill_normal(
        self,
        shape: Sequence[int],
        mean: float = 0.0,
        std: float = 1.0,
        dtype: DType = DType.FLOAT32,
    ) -> Tensor:
        if not std > 0:
            raise ParameterError(f"Standard deviation must be > 0, got {std}")
        self.calls += 1
        # Always draw in float64 so both element types share one stream
        values = self._generator.normal(loc=mean, scale=std, size=tuple(shape))
        return Tensor.wrap(values.astype(DType.of(dtype).numpy))

    def uniform(self, shape: Sequence[int], low: float = 0.0, high: float = 1.0) -> np.ndarray:
        self.calls += 1
        return self._generator.uniform(low, high, size=tuple(shape))

    def integers(self, low: int, high: int, size: int = 1) -> np.ndarray:
        self.calls += 1
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        self.calls += 1
        return self._generator.permutation(n)

    def spawn(self, key: int) -> "Rng":
        child_seed = np.random.SeedSequence([self.seed, int(key) & _SEED_MASK]).generate_state(1, np.uint64)[0]
        return Rng(int(child_seed))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, calls={self.calls})"


def rng_fill_normal(rng: Rng, shape: Sequence[int], mean: float, std: float, dtype: DType = DType.FLOAT32) -> Tensor:
    return rng.fill_normal(shape, mean, std, dtype)
