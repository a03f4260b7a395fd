"""A stand-in trainer for exercising the experiment loop without a model.

Train form:
    python3 -m coresetkit.mock_trainer --mode identity --subset S \\
        --init I --out M --lr 0.1 --wd 1e-4 --epochs 500

validates the subset listing, then writes a small JSON "model" artifact to
M recording the mode and training lineage. A subset listing containing
{"fail": true} makes training exit 1, which lets tests stage failures at a
chosen point in a multi-stage manifest.

Predict form (same template plus --predict): --subset is a test-set
directory with a masks/ subfolder, --init the model artifact, --out the
prediction directory. Modes:
    identity  copy each ground-truth mask verbatim
    empty     all-background masks of the same shape
    dilate    3x3 maximum filter over the labels (grows every instance)
    fail      exit 1 unconditionally
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys

import numpy as np
from scipy import ndimage

from .jsonio import read_json, write_json_atomic
from .patching import read_mask, write_raster

MODES = ("identity", "empty", "dilate", "fail")


def _train(args: argparse.Namespace) -> int:
    if not os.path.exists(args.subset):
        print(f"mock-trainer: subset not found: {args.subset}", file=sys.stderr)
        return 1
    try:
        listing = read_json(args.subset)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"mock-trainer: unreadable subset {args.subset}: {exc}", file=sys.stderr)
        return 1
    if isinstance(listing, dict) and listing.get("fail"):
        print("mock-trainer: refusing to train on poisoned subset", file=sys.stderr)
        return 1
    if args.init != "scratch" and not os.path.exists(args.init):
        print(f"mock-trainer: init model not found: {args.init}", file=sys.stderr)
        return 1
    lineage = []
    if args.init != "scratch":
        lineage = list(read_json(args.init).get("lineage", []))
    lineage.append(args.subset)
    write_json_atomic(
        args.out,
        {
            "format": "mockmodel-v1",
            "mode": args.mode,
            "init": args.init,
            "lineage": lineage,
            "lr": args.lr,
            "wd": args.wd,
            "epochs": args.epochs,
        },
    )
    return 0


def _predict(args: argparse.Namespace) -> int:
    masks_dir = os.path.join(args.subset, "masks")
    if not os.path.isdir(masks_dir):
        print(f"mock-trainer: no masks directory in {args.subset}", file=sys.stderr)
        return 1
    if not os.path.exists(args.init):
        print(f"mock-trainer: model not found: {args.init}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    for name in sorted(os.listdir(masks_dir)):
        src = os.path.join(masks_dir, name)
        dst = os.path.join(args.out, name)
        if args.mode == "identity":
            shutil.copyfile(src, dst)
            continue
        mask = read_mask(src)
        if args.mode == "empty":
            out = np.zeros_like(mask)
        else:  # dilate
            out = ndimage.maximum_filter(mask, size=3)
        write_raster(dst, out.astype(np.int32))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="coresetkit-mock-trainer")
    parser.add_argument("--mode", choices=MODES, required=True)
    parser.add_argument("--subset", required=True)
    parser.add_argument("--init", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--lr", type=float, default=0.1)
    parser.add_argument("--wd", type=float, default=1e-4)
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--predict", action="store_true")
    args = parser.parse_args(argv)
    if args.mode == "fail":
        print("mock-trainer: failing as requested", file=sys.stderr)
        return 1
    return _predict(args) if args.predict else _train(args)


if __name__ == "__main__":
    sys.exit(main())
