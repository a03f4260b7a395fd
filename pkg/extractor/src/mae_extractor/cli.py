"""Command-line entry point: embed a patch directory into an .emb file."""

from __future__ import annotations

import argparse
import sys

import torch

from .extractor import POOLING_MODES, ExtractorConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mae-extract",
        description="Extract MAE patch features into an .emb embedding file",
    )
    parser.add_argument("--patches", required=True, help="directory of patch images")
    parser.add_argument("--checkpoint", required=True,
                        help="model directory or hub id (hub ids need network)")
    parser.add_argument("--out", required=True, help="output .emb path")
    parser.add_argument("--pooling", choices=POOLING_MODES, default="mean-of-tokens")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    # single-threaded inference keeps CPU results reproducible across hosts
    torch.set_num_threads(1)
    cfg = ExtractorConfig(
        checkpoint=args.checkpoint,
        pooling=args.pooling,
        batch_size=args.batch_size,
        device=args.device,
    )
    try:
        extract(args.patches, cfg, args.out)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"embeddings -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
