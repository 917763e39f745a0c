"""
Dataset manifest CSV: `path,label[,split]`, UTF-8, header required.

Relative paths are resolved against the directory holding the manifest.
Row numbers in error messages are file line numbers (the header is line 1).
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from src.config import CLASS_VOCABULARY
from src.utils.errors import DataError, StorageError, UsageError
from src.utils.io import readable_path, writable_path, write_text

logger = logging.getLogger(__name__)

SPLITS = ("train", "test")
BASE_COLUMNS = ["path", "label"]
SPLIT_COLUMN = "split"


@dataclass
class DatasetManifest:
    entries: pd.DataFrame  # columns path, label, split (split is "" when unassigned)
    class_vocabulary: Tuple[str, ...]
    base_dir: Optional[Path] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def num_classes(self) -> int:
        return len(self.class_vocabulary)

    @property
    def has_splits(self) -> bool:
        return bool((self.entries[SPLIT_COLUMN] != "").any())

    def class_index(self, label: str) -> int:
        try:
            return self.class_vocabulary.index(label)
        except ValueError:
            raise DataError(f"Label '{label}' is not in the class vocabulary {list(self.class_vocabulary)}") from None

    def rows(self, split: Optional[str] = None) -> pd.DataFrame:
        if split is None:
            return self.entries
        if split not in SPLITS:
            raise UsageError(f"Unknown split '{split}'; expected one of {list(SPLITS)}")
        return self.entries[self.entries[SPLIT_COLUMN] == split]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def with_splits(self, splits: Sequence[str]) -> "DatasetManifest":
        entries = self.entries.copy()
        entries[SPLIT_COLUMN] = list(splits)
        return DatasetManifest(entries=entries, class_vocabulary=self.class_vocabulary, base_dir=self.base_dir)


def canonical_vocabulary(labels: Sequence[str]) -> Tuple[str, ...]:
    present = set(labels)
    return tuple(c for c in CLASS_VOCABULARY if c in present)


def build_manifest(
    paths: Sequence[str],
    labels: Sequence[str],
    splits: Optional[Sequence[str]] = None,
    class_vocabulary: Optional[Sequence[str]] = None,
    base_dir: Optional[Path] = None,
) -> DatasetManifest:
    """Validate rows and assemble a manifest (rows are numbered from line 2)."""
    if len(paths) != len(labels) or (splits is not None and len(splits) != len(paths)):
        raise UsageError("paths, labels and splits must have equal lengths")
    splits = list(splits) if splits is not None else [""] * len(paths)

    clean_labels = [str(label).strip().lower() for label in labels]
    if class_vocabulary is None:
        vocabulary = canonical_vocabulary([label for label in clean_labels if label in CLASS_VOCABULARY])
    else:
        vocabulary = tuple(str(c).strip().lower() for c in class_vocabulary)
        if len(set(vocabulary)) != len(vocabulary):
            raise UsageError(f"Class vocabulary has duplicates: {list(vocabulary)}")

    seen: Dict[str, int] = {}
    for i, (path, label, split) in enumerate(zip(paths, clean_labels, splits)):
        row = i + 2
        if not str(path).strip():
            raise DataError(f"Row {row}: empty path")
        if label not in vocabulary:
            raise DataError(f"Row {row}: label '{label}' is not in the class vocabulary {list(vocabulary)}")
        if split not in ("",) + SPLITS:
            raise DataError(f"Row {row}: split '{split}' must be one of {list(SPLITS)} or empty")
        if path in seen:
            raise DataError(f"Row {row}: duplicate path '{path}' (first seen on row {seen[path]})")
        seen[path] = row

    if len(vocabulary) < 2:
        raise DataError(f"A manifest needs at least two classes, found {list(vocabulary)}")

    entries = pd.DataFrame({"path": list(paths), "label": clean_labels, SPLIT_COLUMN: splits}, dtype=str)
    return DatasetManifest(entries=entries, class_vocabulary=vocabulary, base_dir=base_dir)


def load_manifest(path: Union[str, Path], class_vocabulary: Optional[Sequence[str]] = None) -> DatasetManifest:
    src = readable_path(path)
    try:
        df = pd.read_csv(src, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DataError(f"Manifest {src} is empty") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Manifest {src} is not a valid UTF-8 CSV: {e}") from None
    except OSError as e:
        raise StorageError(f"Cannot read {src}: {e}") from e

    columns = [c.strip() for c in df.columns]
    if columns not in (BASE_COLUMNS, BASE_COLUMNS + [SPLIT_COLUMN]):
        raise DataError(f"Manifest header must be 'path,label[,split]', got '{','.join(columns)}'")
    df.columns = columns

    splits = df[SPLIT_COLUMN].str.strip().str.lower().tolist() if SPLIT_COLUMN in df else None
    manifest = build_manifest(
        paths=df["path"].str.strip().tolist(),
        labels=df["label"].tolist(),
        splits=splits,
        class_vocabulary=class_vocabulary,
        base_dir=src.resolve().parent,
    )
    logger.info(f"Loaded manifest {src}: {len(manifest)} rows, classes {class_histogram(manifest)}")
    return manifest


def manifest_csv(manifest: DatasetManifest, target_dir: Optional[Path] = None) -> str:
    """CSV text; with `target_dir`, relative paths are rewritten to stay valid from there."""
    columns = BASE_COLUMNS + ([SPLIT_COLUMN] if manifest.has_splits else [])
    entries = manifest.entries[columns].copy()
    if target_dir is not None and manifest.base_dir is not None and target_dir.resolve() != manifest.base_dir.resolve():
        entries["path"] = [_rebase(p, manifest, target_dir) for p in entries["path"]]
    return entries.to_csv(index=False, lineterminator="\n")


def _rebase(path: str, manifest: DatasetManifest, target_dir: Path) -> str:
    if Path(path).is_absolute():
        return path
    return Path(os.path.relpath(manifest.resolve(path).resolve(), target_dir.resolve())).as_posix()


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    """Write the normalized CSV; the split column is written only when assigned."""
    out = writable_path(path)
    write_text(out, manifest_csv(manifest, out.parent))
    logger.info(f"Manifest written: {out} ({len(manifest)} rows)")
    return out


def class_histogram(manifest: DatasetManifest, split: Optional[str] = None) -> Dict[str, int]:
    counts = manifest.rows(split)["label"].value_counts()
    return {c: int(counts.get(c, 0)) for c in manifest.class_vocabulary}


def class_ratio(manifest: DatasetManifest, split: Optional[str] = None) -> str:
    """Class counts relative to the smallest non-empty class, e.g. '1:2.04' or '1:2:2'."""
    counts = [n for n in class_histogram(manifest, split).values()]
    nonzero = [n for n in counts if n > 0]
    if not nonzero:
        return ":".join("0" for _ in counts)
    smallest = min(nonzero)
    common = reduce(gcd, nonzero)
    if common == smallest:
        return ":".join(str(n // common) for n in counts)
    return ":".join(_format_ratio(Fraction(n, smallest)) for n in counts)


def _format_ratio(value: Fraction) -> str:
    text = f"{float(value):.2f}".rstrip("0").rstrip(".")
    return text or "0"


def manifest_summary(manifest: DatasetManifest) -> List[str]:
    lines = [f"classes: {', '.join(manifest.class_vocabulary)}"]
    for split in (None,) + SPLITS:
        if split is not None and not manifest.has_splits:
            continue
        hist = class_histogram(manifest, split)
        label = split or "all"
        lines.append(f"{label}: {hist} ratio {class_ratio(manifest, split)}")
    return lines
