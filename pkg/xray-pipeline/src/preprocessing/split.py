"""
Per-class stratified train/test split.

For each class with n images, floor(train_fraction * n) go to train and the
rest to test; membership is chosen by a seeded shuffle of that class's rows.
Explicit per-class counts replace the floor rule where given.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.autodiff.rng import Rng
from src.config import DEFAULT_TRAIN_FRACTION
from src.ingestion.manifest import DatasetManifest, class_histogram
from src.utils.errors import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

# Absorbs products like 0.29 * 100 = 28.999999999999996
_FLOOR_SLACK = 1e-9


class ClassCounts(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train: int = Field(..., ge=0)
    test: int = Field(..., ge=0)


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_fraction: float = Field(default=DEFAULT_TRAIN_FRACTION, gt=0, lt=1)
    per_class_override: Optional[Dict[str, ClassCounts]] = None
    seed: int = Field(default=0, ge=0, lt=2**64)
    overwrite: bool = False


def train_count(n: int, train_fraction: float) -> int:
    return min(n, math.floor(train_fraction * n + _FLOOR_SLACK))


def stratified_split(manifest: DatasetManifest, spec: SplitSpec) -> DatasetManifest:
    if manifest.has_splits and not spec.overwrite:
        raise UsageError("Manifest already has split assignments; set overwrite to replace them")

    totals = class_histogram(manifest)
    overrides = spec.per_class_override or {}
    for name, counts in overrides.items():
        if name not in totals:
            raise ConfigurationError(f"Override for unknown class '{name}'")
        if counts.train + counts.test != totals[name]:
            raise ConfigurationError(
                f"Override for '{name}' gives {counts.train} train + {counts.test} test, "
                f"but the class has {totals[name]} images"
            )

    rng = Rng(spec.seed)
    labels = manifest.entries["label"].to_numpy()
    splits = np.full(len(manifest), "test", dtype=object)
    for name in manifest.class_vocabulary:
        members = np.flatnonzero(labels == name)
        # One draw per class in vocabulary order keeps the stream stable
        order = members[rng.permutation(len(members))]
        n_train = overrides[name].train if name in overrides else train_count(len(members), spec.train_fraction)
        splits[order[:n_train]] = "train"

    result = manifest.with_splits(splits.tolist())
    logger.info(
        f"Split {len(manifest)} rows at {spec.train_fraction:g}: "
        f"train {class_histogram(result, 'train')}, test {class_histogram(result, 'test')}"
    )
    return result
