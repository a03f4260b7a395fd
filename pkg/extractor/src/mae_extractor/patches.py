"""Patch directory scanning and image preprocessing.

Patch files are named by their canonical id, "image:row:col" plus an image
extension. The scan sorts by the parsed (image, row, col) key, not by the
raw filename, so "a:0:16" precedes "a:0:112" and output row order never
depends on directory listing order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

RASTER_EXTENSIONS = (".tif", ".tiff", ".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class PatchRef:
    """One patch file with its parsed identity."""

    pid: str
    source_image: str
    row: int
    col: int
    path: str


def parse_patch_id(stem: str) -> tuple[str, int, int]:
    parts = stem.rsplit(":", 2)
    if len(parts) != 3 or not parts[0]:
        raise ValueError(f"patch name {stem!r} is not of the form image:row:col")
    try:
        row, col = int(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"patch name {stem!r} has non-integer offsets") from None
    if row < 0 or col < 0:
        raise ValueError(f"patch name {stem!r} has negative offsets")
    return parts[0], row, col


def scan_patch_dir(patch_dir: str) -> list[PatchRef]:
    """All patch files under patch_dir, sorted by (image, row, col)."""
    if not os.path.isdir(patch_dir):
        raise FileNotFoundError(f"patch directory not found: {patch_dir}")
    refs = []
    seen: dict[str, str] = {}
    for name in sorted(os.listdir(patch_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() not in RASTER_EXTENSIONS:
            continue
        source, row, col = parse_patch_id(stem)
        if stem in seen:
            raise ValueError(f"duplicate patch id {stem!r} ({seen[stem]} and {name})")
        seen[stem] = name
        refs.append(
            PatchRef(
                pid=stem,
                source_image=source,
                row=row,
                col=col,
                path=os.path.join(patch_dir, name),
            )
        )
    if not refs:
        raise FileNotFoundError(f"no patch images in {patch_dir}")
    refs.sort(key=lambda r: (r.source_image, r.row, r.col))
    return refs


def replicate_channels(arr: np.ndarray, channels: int = 3) -> np.ndarray:
    """Repeat a single-channel image across the channel axis.

    Pure replication: pairwise distances between patches scale uniformly by
    sqrt(channels), so relative geometry is unchanged.
    """
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[2] == 1:
        return np.repeat(arr, channels, axis=2)
    return arr


def _to_unit_range(arr: np.ndarray, path: str) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float32) / 65535.0
    if np.issubdtype(arr.dtype, np.floating):
        # float rasters are taken as already scaled to [0, 1]
        return arr.astype(np.float32)
    raise ValueError(f"unsupported patch dtype {arr.dtype} in {path}")


def _resize(arr: np.ndarray, image_size: int) -> np.ndarray:
    if arr.shape[:2] == (image_size, image_size):
        return arr
    channels = [
        np.asarray(
            Image.fromarray(arr[:, :, c]).resize(
                (image_size, image_size), Image.BILINEAR
            )
        )
        for c in range(arr.shape[2])
    ]
    return np.stack(channels, axis=2)


def load_patch(
    ref: PatchRef, image_size: int, mean: list[float], std: list[float]
) -> np.ndarray:
    """Read, scale, replicate, resize, and normalize one patch to CHW."""
    try:
        with Image.open(ref.path) as im:
            arr = np.asarray(im)
    except OSError as exc:
        raise ValueError(f"unreadable patch {ref.path}: {exc}") from exc
    if arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    if arr.ndim == 3 and arr.shape[2] not in (1, 3):
        raise ValueError(f"patch {ref.path} has {arr.shape[2]} channels")
    if arr.ndim not in (2, 3):
        raise ValueError(f"patch {ref.path} is not an image array")
    arr = replicate_channels(_to_unit_range(arr, ref.path))
    arr = _resize(arr, image_size)
    arr = (arr - np.asarray(mean, dtype=np.float32)) / np.asarray(std, dtype=np.float32)
    return np.transpose(arr, (2, 0, 1))
