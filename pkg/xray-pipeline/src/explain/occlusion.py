"""
Occlusion sensitivity.

A square patch slides over the image; at each grid position it is filled
with a neutral value (the image mean unless given) and the drop of the
class probability is recorded. Each pixel receives the mean drop of the
patches covering it; negative drops are clipped to zero and the map is
scaled to a maximum of 1.
"""
from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from src.architectures.network import ModelGraph, build_forward
from src.autodiff.tensor import Tensor
from src.explain.gradcam import check_class_index
from src.explain.heatmap import HeatMap, normalize_map
from src.layers import ops as L
from src.utils.errors import ParameterError

logger = logging.getLogger(__name__)


def grid_starts(size: int, patch_size: int, stride: int) -> List[int]:
    """Patch origins along one axis; the last patch is aligned to the far edge."""
    starts = list(range(0, size - patch_size + 1, stride))
    if starts[-1] != size - patch_size:
        starts.append(size - patch_size)
    return starts


def occlusion_map(
    model: ModelGraph,
    image: Tensor,
    class_index: int,
    patch_size: int,
    stride: int,
    fill: Optional[float] = None,
    progress: bool = False,
) -> HeatMap:
    check_class_index(model, class_index)
    size = model.config.input_size
    if not 1 <= patch_size <= size:
        raise ParameterError(f"patch_size must be in 1..{size}, got {patch_size}")
    if stride < 1:
        raise ParameterError(f"stride must be >= 1, got {stride}")

    graph, fp = build_forward(model, image)
    probs = L.softmax(graph, fp.logits)
    baseline = float(graph.forward(probs).numpy()[class_index])

    pixels = image.numpy()
    fill_value = float(pixels.mean()) if fill is None else float(fill)
    starts = grid_starts(size, patch_size, stride)
    grid = np.zeros((len(starts), len(starts)))
    drop_sum = np.zeros((size, size))
    cover = np.zeros((size, size))

    positions = [(i, j) for i in range(len(starts)) for j in range(len(starts))]
    for i, j in tqdm(positions, desc="Occluding", disable=not progress):
        y, x = starts[i], starts[j]
        occluded = pixels.copy()
        occluded[:, y : y + patch_size, x : x + patch_size] = fill_value
        graph.set_leaf(fp.image, Tensor.wrap(occluded))
        drop = baseline - float(graph.forward(probs).numpy()[class_index])
        grid[i, j] = drop
        drop_sum[y : y + patch_size, x : x + patch_size] += drop
        cover[y : y + patch_size, x : x + patch_size] += 1

    graph.set_leaf(fp.image, image)
    values = normalize_map(drop_sum / cover)
    logger.debug(f"Occlusion over {len(positions)} patches, max drop {grid.max():.4f}")
    return HeatMap(
        values=Tensor.wrap(values.astype(np.float32)),
        class_index=class_index,
        method="occlusion",
        grid=np.maximum(grid, 0.0),
    )
