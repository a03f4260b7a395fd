"""Feature-space coverage statistics and a deterministic 2-D projection.

Coverage quantifies how well a selection spans the embedding space: mean
and max distance from every patch to its nearest selected patch (selected
patches contribute 0), mean pairwise distance within the selection, and the
fraction of bins holding at least one selected patch. All distances are
Euclidean in 64-bit, so the statistics are invariant under orthogonal
transformations of the space.

The projection is plain PCA onto the first two principal components with a
fixed sign convention, standing in for a stochastic neighbor embedding so
that plot coordinates are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from . import _kernels
from .embeddings import EmbeddingMatrix
from .quantize import BinPartition, CoresetSelection


@dataclass
class CoverageStats:
    mean_nn_distance: float
    max_nn_distance: float
    mean_pairwise_selected: float
    bin_occupancy: float

    def __post_init__(self) -> None:
        for name in ("mean_nn_distance", "max_nn_distance", "mean_pairwise_selected"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.bin_occupancy <= 1.0:
            raise ValueError(f"bin_occupancy must be in [0, 1], got {self.bin_occupancy}")

    def as_dict(self) -> dict:
        return {
            "mean_nn_distance": self.mean_nn_distance,
            "max_nn_distance": self.max_nn_distance,
            "mean_pairwise_selected": self.mean_pairwise_selected,
            "bin_occupancy": self.bin_occupancy,
        }


def coverage(
    m: EmbeddingMatrix, sel: CoresetSelection, bins: BinPartition
) -> CoverageStats:
    """Coverage statistics of `sel` over the full embedding set.

    max_nn_distance is the covering radius: the farthest any patch sits from
    the selection. A selection of the full set scores 0 for both nearest-
    neighbor statistics and 1 for occupancy.
    """
    if not sel.selected:
        raise ValueError("selection is empty")
    if bins.source_n != m.n:
        raise ValueError(
            f"partition covers {bins.source_n} patches but matrix has {m.n}"
        )
    for idx in sel.selected:
        if not 0 <= idx < m.n:
            raise ValueError(f"selected index {idx} out of range for n={m.n}")
    feats = m.data.astype(np.float64)
    nn = _kernels.nn_distances(feats, np.asarray(sorted(sel.selected), dtype=np.int64))
    chosen = feats[sorted(sel.selected)]
    if len(chosen) < 2:
        mean_pair = 0.0
    else:
        mean_pair = float(pdist(chosen).mean())
    selected_set = set(sel.selected)
    occupied = sum(1 for members in bins.bins if selected_set & set(members))
    return CoverageStats(
        mean_nn_distance=float(nn.mean()),
        max_nn_distance=float(nn.max()),
        mean_pairwise_selected=mean_pair,
        bin_occupancy=occupied / bins.n_bins,
    )


@dataclass
class Projection:
    """2-D coordinates per patch; degenerate marks zero-variance input."""

    coords: np.ndarray
    degenerate: bool


def project_2d(m: EmbeddingMatrix) -> Projection:
    """Project embeddings onto their first two principal components.

    Mean-centered; each component's sign is fixed so its largest-magnitude
    loading is positive. Inputs with fewer than two meaningful directions
    (collinear data, d=1) get a second coordinate of ~0; fully zero-variance
    input returns all-zero coordinates with the degenerate flag set.
    """
    if m.n < 2:
        raise ValueError(f"projection needs n >= 2, got n={m.n}")
    x = m.data.astype(np.float64)
    centered = x - x.mean(axis=0)
    if not np.any(centered):
        return Projection(coords=np.zeros((m.n, 2)), degenerate=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    k = min(2, vt.shape[0])
    components = vt[:k]
    for i in range(k):
        pivot = np.argmax(np.abs(components[i]))
        if components[i][pivot] < 0:
            components[i] = -components[i]
    coords = np.zeros((m.n, 2))
    coords[:, :k] = centered @ components.T
    return Projection(coords=coords, degenerate=False)


def coords_csv_text(
    m: EmbeddingMatrix, proj: Projection, sel: CoresetSelection, bins: BinPartition
) -> str:
    """Plot-ready CSV: id,x,y,selected_flag,bin for every patch."""
    bin_of = {}
    for b, members in enumerate(bins.bins):
        for idx in members:
            bin_of[idx] = b
    selected = set(sel.selected)
    lines = ["id,x,y,selected_flag,bin"]
    for i, pid in enumerate(m.ids):
        lines.append(
            f"{pid},{proj.coords[i, 0]!r},{proj.coords[i, 1]!r},"
            f"{int(i in selected)},{bin_of[i]}"
        )
    return "\n".join(lines) + "\n"
