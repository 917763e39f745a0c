"""
Raster decoding and resizing into model input tensors.

Images are decoded with Pillow. Colour images are reduced to luma with
0.299 R + 0.587 G + 0.114 B computed in floating point, resized bilinearly
with half-pixel centres, then scaled by 1/255 and clamped to [0, 1].
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from tqdm import tqdm

from src.autodiff.tensor import DType, Tensor
from src.config import settings
from src.ingestion.manifest import DatasetManifest
from src.utils.errors import DataError, ParameterError
from src.utils.io import readable_path

logger = logging.getLogger(__name__)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Sample:
    image: Tensor  # [1, S, S], values in [0, 1]
    label_index: int
    source_path: str


def decode_gray(path: Union[str, Path]) -> np.ndarray:
    """Decode an 8-bit raster into a float64 [H, W] plane of 0..255 values."""
    path = readable_path(path)
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode == "L":
                return np.asarray(img, dtype=np.float64)
            if img.mode not in ("RGB", "RGBA", "P", "1", "LA"):
                raise DataError(f"Unsupported pixel mode {img.mode} in {path}")
            if img.mode in ("1", "LA"):
                return np.asarray(img.convert("L"), dtype=np.float64)
            rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (UnidentifiedImageError, OSError) as e:
        raise DataError(f"Cannot decode image {path}: {e}") from None
    return rgb @ LUMA_WEIGHTS


def resize_bilinear(plane: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of an [H, W] plane to [size, size], half-pixel centres, edge clamped."""
    h, w = plane.shape
    if (h, w) == (size, size):
        return plane.copy()

    def axis(n_in: int):
        src = (np.arange(size) + 0.5) * (n_in / size) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, fy = axis(h)
    x0, x1, fx = axis(w)
    top = plane[y0][:, x0] * (1 - fx) + plane[y0][:, x1] * fx
    bottom = plane[y1][:, x0] * (1 - fx) + plane[y1][:, x1] * fx
    return top * (1 - fy)[:, None] + bottom * fy[:, None]


def decode_and_resize(path: Union[str, Path], target_size: int, dtype: DType = DType.FLOAT32) -> Tensor:
    if target_size < 1:
        raise ParameterError(f"target_size must be >= 1, got {target_size}")
    plane = resize_bilinear(decode_gray(path), target_size)
    values = np.clip(plane / 255.0, 0.0, 1.0)
    return Tensor.wrap(values.reshape(1, target_size, target_size).astype(dtype.numpy))


def load_samples(
    manifest: DatasetManifest,
    split: Optional[str],
    size: int,
    workers: Optional[int] = None,
    progress: bool = False,
) -> List[Sample]:
    """Decode the rows of one split in parallel; output order follows the manifest."""
    rows = manifest.rows(split)
    paths = rows["path"].tolist()
    labels = rows["label"].tolist()
    workers = workers or settings.decode_workers

    def decode(path: str) -> Tensor:
        return decode_and_resize(manifest.resolve(path), size)

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        images = list(
            tqdm(pool.map(decode, paths), total=len(paths), desc=f"Decoding {split or 'all'}", disable=not progress)
        )

    samples = [
        Sample(image=img, label_index=manifest.class_index(label), source_path=path)
        for img, label, path in zip(images, labels, paths)
    ]
    logger.info(f"Decoded {len(samples)} {split or 'all'} images at {size}x{size}")
    return samples
