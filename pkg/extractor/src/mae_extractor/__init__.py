"""MAE patch feature extraction into the .emb embedding format."""

from .embfile import FORMAT_VERSION, write_embeddings
from .extractor import POOLING_MODES, ExtractorConfig, extract
from .patches import PatchRef, load_patch, parse_patch_id, replicate_channels, scan_patch_dir

__version__ = "0.1.0"

__all__ = [
    "FORMAT_VERSION",
    "write_embeddings",
    "POOLING_MODES",
    "ExtractorConfig",
    "extract",
    "PatchRef",
    "load_patch",
    "parse_patch_id",
    "replicate_channels",
    "scan_patch_dir",
    "__version__",
]
