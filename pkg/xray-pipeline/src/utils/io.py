from pathlib import Path
from typing import Union

from src.utils.errors import StorageError

PathLike = Union[str, Path]


def writable_path(path: PathLike) -> Path:
    """Validate an output path and create its parent directory."""
    if path is None or str(path).strip() == "":
        raise StorageError("Output path is empty")
    out = Path(path)
    if out.exists() and out.is_dir():
        raise StorageError(f"Output path is a directory: {out}")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"Cannot create directory {out.parent}: {e}") from e
    return out


def readable_path(path: PathLike) -> Path:
    if path is None or str(path).strip() == "":
        raise StorageError("Input path is empty")
    src = Path(path)
    if not src.is_file():
        raise StorageError(f"File not found: {src}")
    return src


def write_bytes(path: PathLike, payload: bytes) -> Path:
    out = writable_path(path)
    try:
        out.write_bytes(payload)
    except OSError as e:
        raise StorageError(f"Cannot write {out}: {e}") from e
    return out


def write_text(path: PathLike, text: str) -> Path:
    out = writable_path(path)
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write {out}: {e}") from e
    return out
