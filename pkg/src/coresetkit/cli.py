"""Command-line interface.

Subcommands mirror the pipeline: patch images, quantize embeddings into a
coreset, compose replay mixtures, plan sweeps and transfer paths, run a
manifest against a trainer, evaluate predictions, and analyze selection
diversity. Every artifact is written in a canonical form (sorted-key JSON,
fixed CSV columns), so rerunning a command with the same inputs produces
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .diversity import coords_csv_text, coverage, project_2d
from .embeddings import EmbeddingFormatError, read_embeddings
from .jsonio import canonical_dumps, read_json, write_text_atomic
from .manifest import (
    TRANSFER_PATHS,
    coreset_as_dict,
    default_test_sets,
    plan_rate_sweep,
    plan_transfer_path,
    save_manifest,
)
from .metrics import aggregate, report_as_dict, report_csv_text, score_image
from .patching import LabeledImage, extract_patches, read_mask, read_raster, write_raster
from .quantize import BinPartition, CoresetSelection, form_bins, sample_coreset
from .replay import ReplayMix


def _cmd_quantize(args: argparse.Namespace) -> int:
    m = read_embeddings(args.embeddings)
    bins = form_bins(m, args.bins)
    sel = sample_coreset(bins, args.rate, args.seed)
    write_text_atomic(args.out, canonical_dumps(coreset_as_dict(sel, bins, list(m.ids))))
    print(f"coreset: {len(sel.selected)}/{m.n} patches -> {args.out}")
    return 0


def _pair_images_and_masks(images_dir: str, masks_dir: str) -> list[tuple[str, str, str]]:
    pairs = []
    for name in sorted(os.listdir(images_dir)):
        mask_path = os.path.join(masks_dir, name)
        if not os.path.exists(mask_path):
            raise FileNotFoundError(f"no mask named {name} in {masks_dir}")
        stem = os.path.splitext(name)[0]
        pairs.append((stem, os.path.join(images_dir, name), mask_path))
    if not pairs:
        raise FileNotFoundError(f"no images in {images_dir}")
    return pairs


def _cmd_patch(args: argparse.Namespace) -> int:
    out_images = os.path.join(args.out, "images")
    out_masks = os.path.join(args.out, "masks")
    os.makedirs(out_images, exist_ok=True)
    os.makedirs(out_masks, exist_ok=True)
    ledger = []
    for stem, image_path, mask_path in _pair_images_and_masks(args.images, args.masks):
        labeled = LabeledImage(
            image=read_raster(image_path), mask=read_mask(mask_path), name=stem
        )
        patch_set = extract_patches(labeled, window=args.window, stride=args.stride)
        for pid, image, mask in patch_set.patches:
            write_raster(os.path.join(out_images, f"{pid}.tif"), image)
            write_raster(os.path.join(out_masks, f"{pid}.tif"), mask.astype(np.int32))
            ledger.append(
                {
                    "id": str(pid),
                    "source": pid.source_image,
                    "row": pid.row_offset,
                    "col": pid.col_offset,
                }
            )
    payload = {
        "format": "patches-v1",
        "window": args.window,
        "stride": args.stride,
        "patches": ledger,
    }
    write_text_atomic(os.path.join(args.out, "patches.json"), canonical_dumps(payload))
    print(f"patched: {len(ledger)} patches -> {args.out}")
    return 0


def _masks_dir(path: str) -> str:
    sub = os.path.join(path, "masks")
    return sub if os.path.isdir(sub) else path


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gt_dir = _masks_dir(args.gt)
    pred_dir = _masks_dir(args.pred)
    names = sorted(os.listdir(gt_dir))
    if not names:
        raise FileNotFoundError(f"no masks in {gt_dir}")
    scores = []
    for name in names:
        pred_path = os.path.join(pred_dir, name)
        if not os.path.exists(pred_path):
            raise FileNotFoundError(f"missing prediction: {pred_path}")
        scores.append(
            score_image(
                os.path.splitext(name)[0],
                read_mask(os.path.join(gt_dir, name)),
                read_mask(pred_path),
            )
        )
    report = aggregate(scores)
    if args.out.endswith(".csv"):
        write_text_atomic(args.out, report_csv_text(report))
    else:
        write_text_atomic(args.out, canonical_dumps(report_as_dict(report)))
    means = " ".join(f"{k}={report.mean[k]:.4f}" for k in sorted(report.mean))
    print(f"evaluated {len(scores)} images: {means}")
    return 0


def _read_id_list(path: str) -> list[str]:
    payload = read_json(path)
    if isinstance(payload, list):
        return [str(x) for x in payload]
    if isinstance(payload, dict):
        if "patches" in payload:
            return [str(p["id"]) for p in payload["patches"]]
        if "selection" in payload:
            return [str(x) for x in payload["selection"]]
    raise ValueError(f"cannot extract patch ids from {path}")


def _cmd_compose_replay(args: argparse.Namespace) -> int:
    target = _read_id_list(args.target)
    if args.source is None:
        mix = ReplayMix(
            source_rate=0.0, source_patches=[], target_patches=target, provenance=None
        )
    else:
        coreset = read_json(args.source)
        if not isinstance(coreset, dict) or "selection" not in coreset:
            raise ValueError(f"{args.source} is not a coreset file")
        mix = ReplayMix(
            source_rate=float(coreset["rate"]),
            source_patches=[str(x) for x in coreset["selection"]],
            target_patches=target,
            provenance=(
                f"{args.source}:rate={coreset['rate']}:seed={coreset['seed']}"
            ),
        )
    payload = {
        "format": "mix-v1",
        "source_rate": mix.source_rate,
        "provenance": mix.provenance,
        "source_patches": mix.source_patches,
        "target_patches": mix.target_patches,
    }
    write_text_atomic(args.out, canonical_dumps(payload))
    print(
        f"mix: {len(mix.source_patches)} source + {len(mix.target_patches)} target "
        f"-> {args.out}"
    )
    return 0


def _parse_rates(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ValueError(f"bad rates {text!r}: {exc}") from exc


def _cmd_plan_sweep(args: argparse.Namespace) -> int:
    m = read_embeddings(args.embeddings)
    manifests = plan_rate_sweep(
        _parse_rates(args.rates),
        m,
        args.bins,
        args.seed,
        args.out,
        domain=args.domain,
        test_set=args.test_set,
        trainer=args.trainer,
    )
    for manifest in manifests:
        path = os.path.join(args.out, f"{manifest.name}.json")
        save_manifest(manifest, path)
        print(f"manifest: {path}")
    return 0


def _parse_stages(text: str) -> list[tuple[str, str]]:
    stages = []
    for tok in text.split(","):
        if not tok:
            continue
        if "=" not in tok:
            raise ValueError(f"bad stage {tok!r}, expected domain=subset")
        domain, subset = tok.split("=", 1)
        stages.append((domain, subset))
    if not stages:
        raise ValueError("no stages given")
    return stages


def _cmd_plan_transfer(args: argparse.Namespace) -> int:
    if (args.path is None) == (args.stages is None):
        raise ValueError("give exactly one of --path or --stages")
    if args.path is not None:
        subsets = dict(_parse_stages(args.subsets)) if args.subsets else {}
        order = TRANSFER_PATHS[args.path]
        missing = [d for d in order if d not in subsets]
        if missing:
            raise ValueError(f"--subsets must map every path domain; missing {missing}")
        stages = [(d, subsets[d]) for d in order]
        name = args.name or f"path_{args.path}"
    else:
        stages = _parse_stages(args.stages)
        name = args.name
    zero_shot = [d for d in (args.zero_shot or "").split(",") if d]
    manifest = plan_transfer_path(
        stages,
        zero_shot,
        name=name,
        seed=args.seed,
        trainer=args.trainer,
        test_sets=default_test_sets(args.test_root),
    )
    save_manifest(manifest, args.out)
    print(f"manifest: {args.out} ({len(manifest.stages)} stages)")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    from .runner import run

    record = run(args.manifest, trainer_cmd=args.trainer_cmd, workdir=args.workdir)
    for k, stage in enumerate(record.stages, start=1):
        print(f"stage {k} ({stage.domain}): exit {stage.exit_status}")
    for domain in sorted(record.reports):
        mean = record.reports[domain].mean
        means = " ".join(f"{k}={mean[k]:.4f}" for k in sorted(mean))
        print(f"eval {domain}: {means}")
    print(f"status: {record.status} (record in {record.run_dir})")
    return 0 if record.status == "ok" else 1


def _selection_from_coreset(path: str, ids: tuple[str, ...]) -> tuple[CoresetSelection, BinPartition]:
    payload = read_json(path)
    index = {pid: i for i, pid in enumerate(ids)}
    try:
        bin_indices = [[index[pid] for pid in members] for members in payload["bins"]]
        selected = [index[pid] for pid in payload["selection"]]
    except KeyError as exc:
        raise ValueError(f"coreset {path} names a patch id not in the embeddings: {exc}")
    bins = BinPartition(bins=bin_indices, source_n=len(ids))
    chosen = set(selected)
    per_bin = [(b, [i for i in members if i in chosen]) for b, members in enumerate(bin_indices)]
    sel = CoresetSelection(
        rate=float(payload["rate"]),
        seed=int(payload["seed"]),
        selected=selected,
        per_bin=per_bin,
    )
    return sel, bins


def _cmd_analyze_diversity(args: argparse.Namespace) -> int:
    m = read_embeddings(args.embeddings)
    sel, bins = _selection_from_coreset(args.coreset, m.ids)
    stats = coverage(m, sel, bins)
    proj = project_2d(m)
    os.makedirs(args.out, exist_ok=True)
    payload = dict(stats.as_dict(), degenerate_projection=proj.degenerate)
    write_text_atomic(os.path.join(args.out, "coverage.json"), canonical_dumps(payload))
    write_text_atomic(
        os.path.join(args.out, "coords.csv"), coords_csv_text(m, proj, sel, bins)
    )
    print(
        f"coverage: mean_nn={stats.mean_nn_distance:.4f} "
        f"radius={stats.max_nn_distance:.4f} occupancy={stats.bin_occupancy:.2f} "
        f"-> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coresetkit",
        description="Dataset quantization, patching, replay, and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="form bins and sample a coreset")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("patch", help="extract sliding-window patches")
    p.add_argument("--images", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=224)
    p.add_argument("--stride", type=int, default=112)
    p.set_defaults(func=_cmd_patch)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compose-replay", help="merge a source coreset with a target set")
    p.add_argument("--source", default=None, help="coreset.json; omit for target-only")
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compose_replay)

    p = sub.add_parser("plan-sweep", help="plan one manifest per quantization rate")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--rates", required=True, help="comma-separated, e.g. 0.01,0.1,1.0")
    p.add_argument("--bins", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--domain", default="cyto")
    p.add_argument("--test-set", default=None)
    p.add_argument("--trainer", default="")
    p.set_defaults(func=_cmd_plan_sweep)

    p = sub.add_parser("plan-transfer", help="plan a multi-stage transfer manifest")
    p.add_argument("--path", choices=sorted(TRANSFER_PATHS), default=None)
    p.add_argument("--subsets", default=None, help="domain=subset,... for --path")
    p.add_argument("--stages", default=None, help="ordered domain=subset,...")
    p.add_argument("--zero-shot", default=None, help="comma-separated domains")
    p.add_argument("--name", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trainer", default="")
    p.add_argument("--test-root", default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plan_transfer)

    p = sub.add_parser("run", help="execute a manifest against a trainer command")
    p.add_argument("--manifest", required=True)
    p.add_argument("--trainer-cmd", default=None)
    p.add_argument("--workdir", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze-diversity", help="coverage stats and 2-D coordinates")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--coreset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze_diversity)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, EmbeddingFormatError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
