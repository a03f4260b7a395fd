"""Sliding-window patch extraction over labeled image/mask pairs.

Window origins step by `stride` while origin+window fits; when the last
regular origin misses the border, one extra border-aligned origin is
appended so every pixel lands in at least one patch. Images smaller than
the window are zero-padded and yield a single patch. Patch order is
row-major over origins. Mask values are copied verbatim: an instance
clipped at a patch border keeps its integer id, and all-background patches
are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from PIL import Image

DEFAULT_WINDOW = 224
DEFAULT_STRIDE = 112


@dataclass(frozen=True)
class PatchId:
    """Identity of one patch: source image name plus window origin.

    Canonical string form is "image:row:col". Image names may themselves
    contain colons; parsing splits from the right.
    """

    source_image: str
    row_offset: int
    col_offset: int

    def __post_init__(self) -> None:
        if not self.source_image:
            raise ValueError("source_image must be non-empty")
        if self.row_offset < 0 or self.col_offset < 0:
            raise ValueError(
                f"offsets must be non-negative, got ({self.row_offset}, {self.col_offset})"
            )

    def __str__(self) -> str:
        return f"{self.source_image}:{self.row_offset}:{self.col_offset}"

    @classmethod
    def parse(cls, text: str) -> "PatchId":
        parts = text.rsplit(":", 2)
        if len(parts) != 3:
            raise ValueError(f"not a patch id: {text!r}")
        name, row, col = parts
        try:
            return cls(name, int(row), int(col))
        except ValueError as exc:
            raise ValueError(f"not a patch id: {text!r}") from exc


@dataclass
class LabeledImage:
    """An intensity image with its instance mask.

    image is H x W or H x W x C; mask is H x W with non-negative integer
    labels, 0 meaning background.
    """

    image: np.ndarray
    mask: np.ndarray
    name: str

    def __post_init__(self) -> None:
        img = np.asarray(self.image)
        msk = np.asarray(self.mask)
        if img.ndim not in (2, 3):
            raise ValueError(f"image must be H x W or H x W x C, got shape {img.shape}")
        if msk.ndim != 2:
            raise ValueError(f"mask must be H x W, got shape {msk.shape}")
        if img.shape[:2] != msk.shape:
            raise ValueError(
                f"image {img.shape[:2]} and mask {msk.shape} dimensions differ"
            )
        if img.shape[0] < 1 or img.shape[1] < 1:
            raise ValueError("image must have H >= 1 and W >= 1")
        if not np.issubdtype(msk.dtype, np.integer):
            raise ValueError(f"mask must be integer-typed, got {msk.dtype}")
        if msk.size and msk.min() < 0:
            raise ValueError("mask labels must be non-negative")
        self.image = img
        self.mask = msk


class Patch(NamedTuple):
    pid: PatchId
    image: np.ndarray
    mask: np.ndarray


@dataclass
class PatchSet:
    """All patches of one labeled image, in row-major origin order."""

    patches: list[Patch]
    window: int
    stride: int

    def __post_init__(self) -> None:
        for p in self.patches:
            if p.image.shape[:2] != (self.window, self.window):
                raise ValueError(f"patch {p.pid} image is not window-sized")
            if p.mask.shape != (self.window, self.window):
                raise ValueError(f"patch {p.pid} mask is not window-sized")

    @property
    def ids(self) -> list[str]:
        return [str(p.pid) for p in self.patches]


def _check_geometry(window: int, stride: int) -> None:
    if window <= 0 or stride <= 0:
        raise ValueError(f"window and stride must be positive, got {window}, {stride}")
    if stride > window:
        raise ValueError(
            f"stride {stride} larger than window {window} would skip pixels"
        )


def grid_origins(dim: int, window: int, stride: int) -> list[int]:
    """Window origins along one axis, border-aligned at the end if needed."""
    _check_geometry(window, stride)
    if dim <= window:
        return [0]
    origins = list(range(0, dim - window + 1, stride))
    if origins[-1] != dim - window:
        origins.append(dim - window)
    return origins


def axis_patch_count(dim: int, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE) -> int:
    """g(x): patches along one axis, closed-form."""
    _check_geometry(window, stride)
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    if dim <= window:
        return 1
    return math.ceil((dim - window) / stride) + 1


def count_patches(
    dims: list[tuple[int, int]],
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> int:
    """Total patch count over a list of (H, W) image dimensions."""
    total = 0
    for h, w in dims:
        total += axis_patch_count(h, window, stride) * axis_patch_count(w, window, stride)
    return total


def _pad_to_window(arr: np.ndarray, window: int) -> np.ndarray:
    h, w = arr.shape[:2]
    if h >= window and w >= window:
        return arr
    pad = [(0, max(0, window - h)), (0, max(0, window - w))]
    pad += [(0, 0)] * (arr.ndim - 2)
    return np.pad(arr, pad, mode="constant", constant_values=0)


def extract_patches(
    img: LabeledImage,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> PatchSet:
    """Extract all window x window patches of `img`.

    Returns:
        PatchSet with axis_patch_count(H) * axis_patch_count(W) patches in
        row-major origin order. Undersized images are zero-padded (mask pads
        with background) and yield one patch at origin (0, 0).
    """
    _check_geometry(window, stride)
    image = _pad_to_window(img.image, window)
    mask = _pad_to_window(img.mask, window)
    h, w = image.shape[:2]
    patches: list[Patch] = []
    for r in grid_origins(h, window, stride):
        for c in grid_origins(w, window, stride):
            pid = PatchId(img.name, r, c)
            patches.append(
                Patch(
                    pid=pid,
                    image=image[r:r + window, c:c + window].copy(),
                    mask=mask[r:r + window, c:c + window].copy(),
                )
            )
    return PatchSet(patches=patches, window=window, stride=stride)


def channel_mean(image: np.ndarray) -> np.ndarray:
    """Reduce a multi-channel image to grayscale by per-pixel channel mean.

    2-D inputs pass through unchanged (upcast to float64). Masks must never
    go through this; it is for intensity images ahead of feature extraction.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3:
        return arr.mean(axis=2)
    raise ValueError(f"expected H x W or H x W x C, got shape {arr.shape}")


def read_raster(path: str) -> np.ndarray:
    """Read an 8/16-bit single- or multi-channel PNG/TIFF into an array."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    return arr


def write_raster(path: str, arr: np.ndarray) -> None:
    """Write an array as a raster file; format follows the extension.

    Supports 2-D uint8/uint16/int32/float32 and 3-D uint8 with 3 or 4
    channels, which covers patch images and integer label masks.
    """
    arr = np.asarray(arr)
    if arr.ndim == 2:
        # fromarray picks L / I;16 / I / F from the dtype
        if arr.dtype in (np.uint8, np.uint16):
            im = Image.fromarray(arr)
        elif np.issubdtype(arr.dtype, np.integer):
            im = Image.fromarray(arr.astype(np.int32))
        elif arr.dtype in (np.float32, np.float64):
            im = Image.fromarray(arr.astype(np.float32))
        else:
            raise ValueError(f"unsupported raster dtype {arr.dtype}")
    elif arr.ndim == 3 and arr.dtype == np.uint8 and arr.shape[2] in (3, 4):
        im = Image.fromarray(arr)
    else:
        raise ValueError(f"unsupported raster shape {arr.shape} / dtype {arr.dtype}")
    im.save(path)


def read_mask(path: str) -> np.ndarray:
    """Read an instance mask, coercing to a non-negative integer array."""
    arr = read_raster(path)
    if arr.ndim != 2:
        raise ValueError(f"mask at {path} is not single-channel")
    if not np.issubdtype(arr.dtype, np.integer):
        if np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise ValueError(f"mask at {path} holds non-integer values")
    return arr.astype(np.int64)
