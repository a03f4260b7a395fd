"""Batched MAE feature extraction into the .emb format.

The encoder runs in eval mode with masking disabled (mask ratio 0 and an
identity shuffle), so an extraction is a pure function of the checkpoint,
the preprocessing recipe, and the patch bytes. Rows are emitted in sorted
patch-id order regardless of batching, and the recipe is recorded in the
file header for provenance.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import torch

from .embfile import write_embeddings
from .patches import load_patch, scan_patch_dir

POOLING_MODES = ("cls-token", "mean-of-tokens")

# Standard ImageNet statistics, used when the checkpoint ships no
# preprocessing config of its own.
DEFAULT_MEAN = [0.485, 0.456, 0.406]
DEFAULT_STD = [0.229, 0.224, 0.225]


@dataclass(frozen=True)
class ExtractorConfig:
    """Checkpoint plus inference knobs; the embedding dimension follows
    the encoder's hidden size."""

    checkpoint: str
    pooling: str = "mean-of-tokens"
    batch_size: int = 8
    device: str = "cpu"

    def __post_init__(self) -> None:
        if not self.checkpoint:
            raise ValueError("checkpoint identifier must be non-empty")
        if self.pooling not in POOLING_MODES:
            raise ValueError(
                f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}"
            )
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ValueError(f"batch size must be a positive integer, got {self.batch_size!r}")


def _load_encoder(cfg: ExtractorConfig):
    from transformers import ViTMAEModel

    try:
        model = ViTMAEModel.from_pretrained(cfg.checkpoint, mask_ratio=0.0)
    except Exception as exc:
        raise ValueError(f"cannot load checkpoint {cfg.checkpoint!r}: {exc}") from exc
    model.eval()
    model.to(cfg.device)
    return model


def _preprocessing_recipe(cfg: ExtractorConfig, model) -> dict:
    """The resize/normalize parameters: the checkpoint's own when published,
    ImageNet defaults otherwise."""
    image_size = int(model.config.image_size)
    mean, std = DEFAULT_MEAN, DEFAULT_STD
    processor_path = os.path.join(cfg.checkpoint, "preprocessor_config.json")
    if os.path.isfile(processor_path):
        with open(processor_path, "r", encoding="utf-8") as fh:
            published = json.load(fh)
        mean = [float(x) for x in published.get("image_mean", mean)]
        std = [float(x) for x in published.get("image_std", std)]
        size = published.get("size")
        if isinstance(size, dict) and "height" in size:
            image_size = int(size["height"])
        elif isinstance(size, int):
            image_size = int(size)
    return {
        "checkpoint": cfg.checkpoint,
        "pooling": cfg.pooling,
        "image_size": image_size,
        "resample": "bilinear",
        "rescale": "uint8/255, uint16/65535, float as-is",
        "channels": 3,
        "mean": mean,
        "std": std,
    }


def _pool(hidden: torch.Tensor, pooling: str) -> torch.Tensor:
    # hidden is (batch, 1 + tokens, d) with the cls token first
    if pooling == "cls-token":
        return hidden[:, 0]
    return hidden[:, 1:].mean(dim=1)


def extract(patch_dir: str, cfg: ExtractorConfig, out: str) -> None:
    """Embed every patch image under patch_dir and write an .emb file.

    Deterministic: same checkpoint, config, and patch bytes give a
    byte-identical output file.
    """
    refs = scan_patch_dir(patch_dir)
    model = _load_encoder(cfg)
    recipe = _preprocessing_recipe(cfg, model)
    image_size, mean, std = recipe["image_size"], recipe["mean"], recipe["std"]

    rows: list[np.ndarray] = []
    dim: int | None = None
    with torch.no_grad():
        for start in range(0, len(refs), cfg.batch_size):
            batch_refs = refs[start:start + cfg.batch_size]
            pixels = np.stack(
                [load_patch(r, image_size, mean, std) for r in batch_refs]
            )
            pixel_values = torch.from_numpy(pixels).to(cfg.device)
            tokens = model.config.image_size // model.config.patch_size
            # identity shuffle: with mask ratio 0 this keeps every token in
            # place, so batching cannot perturb the features
            noise = torch.arange(
                tokens * tokens, dtype=torch.float32, device=cfg.device
            ).expand(len(batch_refs), -1)
            hidden = model(pixel_values=pixel_values, noise=noise).last_hidden_state
            feats = _pool(hidden, cfg.pooling).cpu().numpy().astype(np.float32)
            if dim is None:
                dim = feats.shape[1]
            elif feats.shape[1] != dim:
                raise ValueError(
                    f"feature dimension changed across batches: {dim} then {feats.shape[1]}"
                )
            rows.append(feats)

    data = np.concatenate(rows, axis=0)
    write_embeddings([r.pid for r in refs], data, out, meta=recipe)
