"""
Heat-map record, raster overlay and raw CSV dump.

The overlay blends the gray-scale base with matplotlib's "autumn" colormap
(red to yellow) using the heat value itself as opacity, so a zero map
reproduces the base image and a saturated map is fully tinted.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Union

import matplotlib
import numpy as np
import pandas as pd
from PIL import Image

from src.autodiff.tensor import Tensor
from src.utils.errors import ShapeError, UsageError
from src.utils.io import write_bytes, write_text

logger = logging.getLogger(__name__)

OVERLAY_COLORMAP = "autumn"

Method = Literal["gradcam", "occlusion"]


@dataclass(frozen=True)
class HeatMap:
    values: Tensor  # [S, S], in [0, 1]
    class_index: int
    method: Method
    grid: Optional[np.ndarray] = None  # occlusion only: drop per grid cell before upsampling

    def __post_init__(self):
        v = self.values.numpy()
        if v.ndim != 2:
            raise ShapeError(f"Heat map must be [S, S], got {list(v.shape)}")
        if v.min() < 0 or v.max() > 1:
            raise UsageError(f"Heat values must lie in [0, 1], got [{v.min()}, {v.max()}]")

    @property
    def shape(self):
        return self.values.shape


def normalize_map(raw: np.ndarray) -> np.ndarray:
    """Clip negatives and scale so the maximum is 1; an all-zero map stays zero."""
    raw = np.maximum(np.asarray(raw, dtype=np.float64), 0.0)
    peak = raw.max() if raw.size else 0.0
    if peak <= 0 or not np.isfinite(peak):
        return np.zeros_like(raw)
    return np.clip(raw / peak, 0.0, 1.0)


def _base_plane(base_image: Union[Tensor, np.ndarray]) -> np.ndarray:
    base = base_image.numpy() if isinstance(base_image, Tensor) else np.asarray(base_image)
    if base.ndim == 3 and base.shape[0] == 1:
        base = base[0]
    if base.ndim != 2:
        raise ShapeError(f"Base image must be [1, S, S] or [S, S], got {list(base.shape)}")
    return np.clip(base.astype(np.float64), 0.0, 1.0)


def overlay_rgb(heat: HeatMap, base_image: Union[Tensor, np.ndarray]) -> np.ndarray:
    """uint8 [S, S, 3] blend of the base image and the colored heat map."""
    base = _base_plane(base_image)
    values = heat.values.numpy().astype(np.float64)
    if base.shape != values.shape:
        raise ShapeError(f"Heat map {list(values.shape)} and base image {list(base.shape)} differ in size")
    colors = matplotlib.colormaps[OVERLAY_COLORMAP](values)[..., :3]
    alpha = values[..., None]
    gray = np.repeat(base[..., None], 3, axis=2)
    blended = gray * (1.0 - alpha) + colors * alpha
    return np.clip(np.round(blended * 255.0), 0, 255).astype(np.uint8)


def render_heatmap(heat: HeatMap, base_image: Union[Tensor, np.ndarray], path: Union[str, Path]) -> Path:
    buffer = io.BytesIO()
    Image.fromarray(overlay_rgb(heat, base_image)).save(buffer, format="PNG")
    out = write_bytes(path, buffer.getvalue())
    logger.info(f"Heat map ({heat.method}, class {heat.class_index}) rendered to {out}")
    return out


def write_heatmap_csv(heat: HeatMap, path: Union[str, Path]) -> Path:
    """Raw values, one CSV row per image row, no header."""
    frame = pd.DataFrame(heat.values.numpy().astype(np.float64))
    return write_text(path, frame.to_csv(header=False, index=False, lineterminator="\n", float_format="%.9g"))
