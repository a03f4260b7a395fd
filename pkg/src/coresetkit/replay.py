"""Replay mixtures: a slice of the source domain plus the full target set.

The mix is a flat union with no sample weighting; shuffling is the
trainer's job. Source entries come from a dataset-quantization selection
at the requested rate, target entries are always the complete target list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .quantize import CoresetSelection


@dataclass
class ReplayMix:
    """A replay training mixture.

    Invariants: source and target ids are disjoint (they come from distinct
    domains), free of duplicates, and source_rate 0 means no source entries.
    """

    source_rate: float
    source_patches: list[str]
    target_patches: list[str]
    provenance: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.source_rate <= 1.0:
            raise ValueError(f"source_rate must be in [0, 1], got {self.source_rate}")
        if self.source_rate == 0.0 and self.source_patches:
            raise ValueError("source_rate 0 requires an empty source list")
        if len(set(self.source_patches)) != len(self.source_patches):
            raise ValueError("duplicate source patch ids")
        if len(set(self.target_patches)) != len(self.target_patches):
            raise ValueError("duplicate target patch ids")
        if not self.target_patches:
            raise ValueError("target list must be non-empty")
        overlap = set(self.source_patches) & set(self.target_patches)
        if overlap:
            raise ValueError(
                f"patch ids appear in both domains (mislabeled inputs?): "
                f"{sorted(overlap)[:5]}"
            )

    @property
    def all_patches(self) -> list[str]:
        """Every mix entry, source first then target; length is the exact sum."""
        return list(self.source_patches) + list(self.target_patches)


def compose_replay(
    source: CoresetSelection | Sequence[str] | None,
    target: Sequence[str],
    *,
    source_ids: Sequence[str] | None = None,
    provenance: str | None = None,
) -> ReplayMix:
    """Build a replay mix from a source selection and the full target list.

    Args:
        source: a CoresetSelection (give `source_ids` to map its indices to
            patch ids), an explicit list of source patch ids (treated as the
            full source set, rate 1), or None/empty for a target-only mix.
        target: every target patch id.
        source_ids: full source id list, indexed by the selection's indices.
        provenance: free-form note about where the selection came from.

    Returns:
        ReplayMix listing every selected source patch once and every target
        patch once.
    """
    if isinstance(source, CoresetSelection):
        if source_ids is None:
            raise ValueError("source_ids is required to resolve a CoresetSelection")
        picked = [source_ids[i] for i in source.selected]
        rate = source.rate
        if provenance is None:
            provenance = f"coreset rate={source.rate} seed={source.seed}"
    elif source is None:
        picked = []
        rate = 0.0
    else:
        picked = [str(s) for s in source]
        rate = 1.0 if picked else 0.0
    return ReplayMix(
        source_rate=rate,
        source_patches=picked,
        target_patches=[str(t) for t in target],
        provenance=provenance,
    )
