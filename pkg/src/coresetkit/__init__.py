"""coresetkit: dataset quantization and a transfer-experiment harness.

The pipeline: patch labeled images, embed the patches (any extractor that
writes the .emb format), quantize the embeddings into diversity-preserving
bins, sample coresets at a chosen rate, and drive multi-stage training and
evaluation through declarative manifests.
"""

from .diversity import CoverageStats, Projection, coverage, project_2d
from .embeddings import (
    EmbeddingFormatError,
    EmbeddingMatrix,
    read_embeddings,
    write_embeddings,
)
from .manifest import (
    DOMAINS,
    TRANSFER_PATHS,
    ExperimentManifest,
    Hyperparameters,
    TrainingStage,
    load_manifest,
    plan_rate_sweep,
    plan_transfer_path,
    save_manifest,
)
from .metrics import (
    ImageScores,
    MatchResult,
    MetricsReport,
    aggregate,
    match_instances,
    pairwise_metrics,
    panoptic_quality,
    score_image,
)
from .patching import (
    LabeledImage,
    Patch,
    PatchId,
    PatchSet,
    channel_mean,
    count_patches,
    extract_patches,
)
from .quantize import (
    BinPartition,
    CoresetSelection,
    form_bins,
    gain,
    quota,
    random_baseline,
    sample_coreset,
)
from .replay import ReplayMix, compose_replay
from .runner import RunRecord, StageResult, run

__version__ = "0.1.0"

__all__ = [
    "BinPartition",
    "CoresetSelection",
    "CoverageStats",
    "DOMAINS",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "ExperimentManifest",
    "Hyperparameters",
    "ImageScores",
    "LabeledImage",
    "MatchResult",
    "MetricsReport",
    "Patch",
    "PatchId",
    "PatchSet",
    "Projection",
    "ReplayMix",
    "RunRecord",
    "StageResult",
    "TrainingStage",
    "TRANSFER_PATHS",
    "aggregate",
    "channel_mean",
    "compose_replay",
    "count_patches",
    "coverage",
    "extract_patches",
    "form_bins",
    "gain",
    "load_manifest",
    "match_instances",
    "pairwise_metrics",
    "panoptic_quality",
    "plan_rate_sweep",
    "plan_transfer_path",
    "project_2d",
    "quota",
    "random_baseline",
    "read_embeddings",
    "run",
    "sample_coreset",
    "save_manifest",
    "score_image",
    "write_embeddings",
]
