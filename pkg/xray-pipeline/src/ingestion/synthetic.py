"""
Synthetic gray-scale dataset with a planted, class-specific feature.

Every image is a noisy dark background. Class k additionally carries a
textured square at its own location:

    class 0 (covid)      uniform bright square, upper left
    class 1 (normal)     horizontal stripes, upper right
    class 2 (pneumonia)  checkerboard, lower middle

The square's side is size // 4 and it is jittered by up to size // 16
pixels. Each PNG gets a sidecar JSON {path, classIndex, featureBox}, the box
being [x0, y0, x1, y1] with exclusive upper corners, and the directory
gets a `manifest.csv`.
"""
from __future__ import annotations

import io
import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from PIL import Image
from tqdm import tqdm

from src.autodiff.rng import Rng
from src.config import CLASS_VOCABULARY
from src.ingestion.manifest import DatasetManifest, build_manifest, save_manifest
from src.utils.errors import ParameterError, StorageError
from src.utils.io import write_bytes, write_text

logger = logging.getLogger(__name__)

MIN_SIZE = 16
BACKGROUND = 0.3
NOISE_STD = 0.05
BRIGHT = 0.95
DIM = 0.55

Box = Tuple[int, int, int, int]


def class_anchor(class_index: int, size: int) -> Box:
    """Nominal (unjittered) feature box of a class."""
    side = size // 4
    anchors = {
        0: (size // 8, size // 8),
        1: (size - size // 8 - side, size // 8),
        2: ((size - side) // 2, size - size // 8 - side),
    }
    x0, y0 = anchors[class_index]
    return (x0, y0, x0 + side, y0 + side)


def _texture(class_index: int, side: int) -> np.ndarray:
    yy, xx = np.mgrid[0:side, 0:side]
    if class_index == 0:
        return np.full((side, side), BRIGHT)
    if class_index == 1:
        return np.where((yy // 2) % 2 == 0, BRIGHT, DIM)
    return np.where(((yy // 2) + (xx // 2)) % 2 == 0, BRIGHT, DIM)


def render_sample(rng: Rng, class_index: int, size: int) -> Tuple[np.ndarray, Box]:
    """One uint8 image of the given class and its jittered feature box."""
    pixels = BACKGROUND + NOISE_STD * rng.fill_normal((size, size), 0.0, 1.0).numpy().astype(np.float64)
    ax0, ay0, ax1, _ = class_anchor(class_index, size)
    side = ax1 - ax0
    jitter = max(size // 16, 1)
    dx, dy = (int(v) for v in rng.integers(-jitter, jitter + 1, size=2))
    x0 = min(max(ax0 + dx, 0), size - side)
    y0 = min(max(ay0 + dy, 0), size - side)
    box = (x0, y0, x0 + side, y0 + side)
    pixels[y0 : y0 + side, x0 : x0 + side] = _texture(class_index, side) + NOISE_STD * 0.5 * rng.fill_normal(
        (side, side), 0.0, 1.0
    ).numpy().astype(np.float64)
    image = np.clip(np.round(pixels * 255.0), 0, 255).astype(np.uint8)
    return image, box


def encode_png(image: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(image).save(buffer, format="PNG")
    return buffer.getvalue()


def generate_synthetic(
    out_dir: Union[str, Path],
    num_per_class: int,
    size: int,
    num_classes: int = 3,
    seed: int = 0,
    progress: bool = False,
) -> DatasetManifest:
    if size < MIN_SIZE:
        raise ParameterError(f"Synthetic images need size >= {MIN_SIZE}, got {size}")
    if num_per_class < 1:
        raise ParameterError(f"num_per_class must be >= 1, got {num_per_class}")
    if num_classes not in (2, 3):
        raise ParameterError(f"num_classes must be 2 or 3, got {num_classes}")

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"Cannot create output directory {out}: {e}") from e
    if not out.is_dir():
        raise StorageError(f"Output path is not a directory: {out}")

    rng = Rng(seed)
    vocabulary = CLASS_VOCABULARY[:num_classes]
    paths: List[str] = []
    labels: List[str] = []
    jobs = [(k, i) for k in range(num_classes) for i in range(num_per_class)]
    for class_index, i in tqdm(jobs, desc="Synthesizing", disable=not progress):
        image, box = render_sample(rng, class_index, size)
        name = f"{vocabulary[class_index]}_{i:04d}.png"
        write_bytes(out / name, encode_png(image))
        sidecar = {"path": name, "classIndex": class_index, "featureBox": list(box)}
        write_text(out / f"{Path(name).stem}.json", json.dumps(sidecar) + "\n")
        paths.append(name)
        labels.append(vocabulary[class_index])

    manifest = build_manifest(paths, labels, class_vocabulary=vocabulary, base_dir=out.resolve())
    save_manifest(manifest, out / "manifest.csv")
    logger.info(f"✓ Generated {len(paths)} synthetic images ({num_per_class} per class, {size}x{size}) in {out}")
    return manifest


def load_sidecar(image_path: Union[str, Path]) -> Dict:
    """Sidecar record written next to a synthetic image."""
    sidecar = Path(image_path).with_suffix(".json")
    try:
        return json.loads(sidecar.read_text(encoding="utf-8"))
    except OSError as e:
        raise StorageError(f"Cannot read sidecar {sidecar}: {e}") from e


def region_mean_classifier(image: np.ndarray, num_classes: int) -> int:
    """Pixel-statistics baseline: the class whose feature region is brightest on average."""
    size = image.shape[-1]
    plane = image.reshape(image.shape[-2], size)
    means = []
    for k in range(num_classes):
        x0, y0, x1, y1 = class_anchor(k, size)
        means.append(float(plane[y0:y1, x0:x1].mean()))
    return int(np.argmax(means))
