"""Dataset quantization: greedy bin formation and per-bin coreset sampling.

Bins are built one at a time. Within a bin, candidates are added greedily by
the submodular gain

    P(x_k) = sum_{p in partial bin} ||f(p) - f(x_k)||^2
           - sum_{p in anchor \\ {x_k}} ||f(p) - f(x_k)||^2

where the anchor for bin formation is the full dataset minus the current
partial bin. Since the full-set term is constant per candidate, the greedy
argmax reduces to 2*A(x) - B(x) with A the partial-bin sum (reset per bin)
and B the full-set sum (computed once); this caching is exact, not an
approximation. Ties go to the lowest index. All distance math is 64-bit.

The coreset is then drawn uniformly without replacement from each bin with a
counter-based generator (Philox) keyed by (seed, bin index), so per-bin draws
are independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .embeddings import EmbeddingMatrix

DEFAULT_BINS = 5


@dataclass
class BinPartition:
    """Ordered partition of patch indices {0..source_n-1} into bins.

    Invariants, checked on construction: bins are pairwise disjoint, cover
    the full index range, are non-empty, and their sizes differ by at most 1.
    Members are listed in ascending index order.
    """

    bins: list[list[int]]
    source_n: int

    def __post_init__(self) -> None:
        if self.source_n < 1:
            raise ValueError(f"source_n must be >= 1, got {self.source_n}")
        if not self.bins:
            raise ValueError("partition must have at least one bin")
        seen: set[int] = set()
        total = 0
        for b, members in enumerate(self.bins):
            if not members:
                raise ValueError(f"bin {b} is empty")
            for idx in members:
                if not 0 <= idx < self.source_n:
                    raise ValueError(f"index {idx} out of range in bin {b}")
                if idx in seen:
                    raise ValueError(f"index {idx} appears in more than one bin")
                seen.add(idx)
            total += len(members)
        if total != self.source_n:
            raise ValueError(
                f"bins cover {total} indices but source_n={self.source_n}"
            )
        sizes = [len(b) for b in self.bins]
        if max(sizes) - min(sizes) > 1:
            raise ValueError(f"bin sizes {sizes} differ by more than 1")

    @property
    def n_bins(self) -> int:
        return len(self.bins)


@dataclass
class CoresetSelection:
    """Indices drawn from a partition at a fixed rate.

    `selected` is exactly the concatenation of the per-bin selections in bin
    order; each per-bin list is sorted ascending.
    """

    rate: float
    seed: int
    selected: list[int]
    per_bin: list[tuple[int, list[int]]]

    def __post_init__(self) -> None:
        _check_rate(self.rate)
        _check_seed(self.seed)
        concat: list[int] = []
        for _, picks in self.per_bin:
            concat.extend(picks)
        if concat != list(self.selected):
            raise ValueError("selected must equal the concatenation of per_bin")
        if len(set(concat)) != len(concat):
            raise ValueError("duplicate indices in selection")


def _check_rate(rate: float) -> None:
    if not isinstance(rate, (int, float)) or isinstance(rate, bool):
        raise ValueError(f"rate must be a number, got {rate!r}")
    if math.isnan(rate) or not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")


def _check_seed(seed: int) -> None:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")


def quota(bin_size: int, rate: float) -> int:
    """Sample count for a bin: max(1, round(rate*size)), round half up.

    Every bin contributes at least one sample for any rate > 0.
    """
    _check_rate(rate)
    if bin_size < 1:
        raise ValueError(f"bin_size must be >= 1, got {bin_size}")
    return max(1, math.floor(rate * bin_size + 0.5))


def gain(
    candidate: int,
    partial_bin: Iterable[int],
    pool: Iterable[int],
    m: EmbeddingMatrix,
) -> float:
    """Submodular gain of adding `candidate` to `partial_bin`.

    Args:
        candidate: patch index, must be in `pool`.
        partial_bin: indices already in the bin under construction.
        pool: indices the second sum runs over (candidate's self-term is
            skipped); must be disjoint from `partial_bin`.
        m: embedding matrix.

    Returns:
        Sum of squared distances to the partial bin minus the sum of squared
        distances to the rest of the pool, accumulated in float64 in index
        order.
    """
    part = sorted(set(partial_bin))
    rest = sorted(set(pool))
    for idx in part + rest + [candidate]:
        if not 0 <= idx < m.n:
            raise IndexError(f"index {idx} out of range for n={m.n}")
    if candidate not in set(rest):
        raise ValueError(f"candidate {candidate} not in pool")
    if set(part) & set(rest):
        raise ValueError("partial_bin and pool must be disjoint")
    x = m.data[candidate].astype(np.float64)
    attract = 0.0
    for idx in part:
        diff = m.data[idx].astype(np.float64) - x
        attract += float(diff @ diff)
    repel = 0.0
    for idx in rest:
        if idx == candidate:
            continue
        diff = m.data[idx].astype(np.float64) - x
        repel += float(diff @ diff)
    return attract - repel


def bin_sizes(n: int, n_bins: int) -> list[int]:
    """Balanced bin sizes: the first n mod n_bins bins take the extra item."""
    if not 1 <= n_bins <= n:
        raise ValueError(f"n_bins must be in [1, {n}], got {n_bins}")
    base, extra = divmod(n, n_bins)
    return [base + 1 if b < extra else base for b in range(n_bins)]


def form_bins(m: EmbeddingMatrix, n_bins: int = DEFAULT_BINS) -> BinPartition:
    """Partition all patch indices into `n_bins` bins by greedy gain.

    Deterministic: no randomness, ties resolved to the lowest index. Bin
    members are returned sorted ascending.
    """
    if not isinstance(n_bins, int) or isinstance(n_bins, bool):
        raise ValueError(f"n_bins must be an integer, got {n_bins!r}")
    sizes = bin_sizes(m.n, n_bins)
    order = _kernels.greedy_order(
        m.data.astype(np.float64), np.asarray(sizes, dtype=np.int64)
    )
    bins: list[list[int]] = []
    pos = 0
    for size in sizes:
        members = sorted(int(i) for i in order[pos:pos + size])
        bins.append(members)
        pos += size
    return BinPartition(bins=bins, source_n=m.n)


def _bin_rng(seed: int, bin_index: int) -> np.random.Generator:
    # 128-bit Philox key: seed in the high word, bin index in the low word
    return np.random.Generator(np.random.Philox(key=(seed << 64) | bin_index))


def sample_coreset(p: BinPartition, rate: float, seed: int) -> CoresetSelection:
    """Draw quota(|bin|, rate) indices uniformly from each bin.

    Each bin uses its own generator stream keyed by (seed, bin index), so
    the draw for one bin does not depend on any other bin. rate=1 selects
    everything.
    """
    _check_rate(rate)
    _check_seed(seed)
    per_bin: list[tuple[int, list[int]]] = []
    selected: list[int] = []
    for b, members in enumerate(p.bins):
        q = quota(len(members), rate)
        rng = _bin_rng(seed, b)
        pick = rng.choice(len(members), size=q, replace=False)
        chosen = sorted(members[int(i)] for i in pick)
        per_bin.append((b, chosen))
        selected.extend(chosen)
    return CoresetSelection(rate=rate, seed=seed, selected=selected, per_bin=per_bin)


def random_baseline(n: int, rate: float, seed: int) -> CoresetSelection:
    """Uniform sample without replacement of quota(n, rate) indices.

    The comparison baseline: one pseudo-bin holding all indices, same
    generator recipe as sample_coreset's bin 0.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_rate(rate)
    _check_seed(seed)
    q = quota(n, rate)
    rng = _bin_rng(seed, 0)
    pick = sorted(int(i) for i in rng.choice(n, size=q, replace=False))
    return CoresetSelection(
        rate=rate, seed=seed, selected=list(pick), per_bin=[(0, list(pick))]
    )


def selection_ids(sel: CoresetSelection, ids: Sequence[str]) -> list[str]:
    """Map selected indices to patch ids, preserving selection order."""
    return [ids[i] for i in sel.selected]
