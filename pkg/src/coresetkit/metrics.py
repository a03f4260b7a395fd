"""Instance-segmentation metrics and their mean/std aggregation.

Six metrics per (ground-truth, prediction) mask pair. Conventions, fixed
and documented here:

* iou, dice, accuracy are pixel-level on the binarized foreground (any
  positive label counts as foreground).
* precision and recall are instance-level, derived from IoU > 0.5 matching.
  The strict 0.5 threshold makes the matching unique, so no assignment
  solver is involved.
* pq is the standard panoptic quality, sum of matched IoUs over
  TP + FP/2 + FN/2.
* Empty-vs-empty masks score 1.0 (vacuous perfection); an empty side
  against a non-empty side scores 0 for the ratio metrics.
* Aggregation reports population std (divisor n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRIC_NAMES = ("iou", "dice", "precision", "recall", "accuracy", "pq")


@dataclass
class MatchResult:
    """Unique IoU > 0.5 pairing between gt and pred instances.

    pairs holds (gt label, pred label, IoU) sorted by gt label; the
    unmatched lists are the FN (gt) and FP (pred) labels, sorted.
    """

    pairs: list[tuple[int, int, float]]
    unmatched_gt: list[int]
    unmatched_pred: list[int]

    def __post_init__(self) -> None:
        gts = [g for g, _, _ in self.pairs]
        preds = [p for _, p, _ in self.pairs]
        if len(set(gts)) != len(gts) or len(set(preds)) != len(preds):
            raise ValueError("a label appears in more than one matched pair")
        for g, p, iou in self.pairs:
            if not iou > 0.5:
                raise ValueError(f"pair ({g}, {p}) has IoU {iou} <= 0.5")
        if set(gts) & set(self.unmatched_gt):
            raise ValueError("gt label both matched and unmatched")
        if set(preds) & set(self.unmatched_pred):
            raise ValueError("pred label both matched and unmatched")

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_pred)

    @property
    def fn(self) -> int:
        return len(self.unmatched_gt)


def _check_masks(gt: np.ndarray, pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gt = np.asarray(gt)
    pred = np.asarray(pred)
    if gt.ndim != 2 or pred.ndim != 2:
        raise ValueError("masks must be 2-dimensional")
    if gt.shape != pred.shape:
        raise ValueError(f"mask shapes differ: {gt.shape} vs {pred.shape}")
    for name, arr in (("gt", gt), ("pred", pred)):
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"{name} mask must be integer-typed, got {arr.dtype}")
        if arr.size and arr.min() < 0:
            raise ValueError(f"{name} mask has negative labels")
    return gt, pred


def _label_areas(mask: np.ndarray) -> dict[int, int]:
    labels, counts = np.unique(mask[mask > 0], return_counts=True)
    return {int(l): int(c) for l, c in zip(labels, counts)}


def match_instances(gt: np.ndarray, pred: np.ndarray) -> MatchResult:
    """Pair gt and pred instances whose IoU exceeds 0.5.

    At this threshold at most one pred can match a given gt instance and
    vice versa, so the greedy pairing below is the optimal assignment.
    """
    gt, pred = _check_masks(gt, pred)
    gt_areas = _label_areas(gt)
    pred_areas = _label_areas(pred)
    both = (gt > 0) & (pred > 0)
    pairs: list[tuple[int, int, float]] = []
    if both.any():
        stacked = np.stack([gt[both], pred[both]], axis=1)
        combos, counts = np.unique(stacked, axis=0, return_counts=True)
        for (g, p), inter in zip(combos, counts):
            g, p, inter = int(g), int(p), int(inter)
            union = gt_areas[g] + pred_areas[p] - inter
            iou = inter / union
            if iou > 0.5:
                pairs.append((g, p, iou))
    pairs.sort(key=lambda t: t[0])
    matched_gt = {g for g, _, _ in pairs}
    matched_pred = {p for _, p, _ in pairs}
    return MatchResult(
        pairs=pairs,
        unmatched_gt=sorted(set(gt_areas) - matched_gt),
        unmatched_pred=sorted(set(pred_areas) - matched_pred),
    )


def panoptic_quality(m: MatchResult) -> float:
    """PQ = (sum of matched IoUs) / (TP + FP/2 + FN/2); 1.0 when no instances."""
    denom = m.tp + 0.5 * m.fp + 0.5 * m.fn
    if denom == 0:
        return 1.0
    return sum(iou for _, _, iou in m.pairs) / denom


def _pixel_metrics(gt: np.ndarray, pred: np.ndarray) -> tuple[float, float, float]:
    fg_gt = gt > 0
    fg_pred = pred > 0
    inter = int(np.count_nonzero(fg_gt & fg_pred))
    a = int(np.count_nonzero(fg_gt))
    b = int(np.count_nonzero(fg_pred))
    union = a + b - inter
    iou = 1.0 if union == 0 else inter / union
    dice = 1.0 if a + b == 0 else 2 * inter / (a + b)
    accuracy = int(np.count_nonzero(fg_gt == fg_pred)) / gt.size
    return iou, dice, accuracy


def _instance_pr(m: MatchResult) -> tuple[float, float]:
    # 0/0 conventions: an empty side is perfect only against an empty side
    if m.tp + m.fp == 0:
        precision = 1.0 if m.fn == 0 else 0.0
    else:
        precision = m.tp / (m.tp + m.fp)
    if m.tp + m.fn == 0:
        recall = 1.0 if m.fp == 0 else 0.0
    else:
        recall = m.tp / (m.tp + m.fn)
    return precision, recall


def pairwise_metrics(
    gt: np.ndarray, pred: np.ndarray
) -> tuple[float, float, float, float, float]:
    """(iou, dice, precision, recall, accuracy) for one mask pair."""
    gt, pred = _check_masks(gt, pred)
    iou, dice, accuracy = _pixel_metrics(gt, pred)
    precision, recall = _instance_pr(match_instances(gt, pred))
    return iou, dice, precision, recall, accuracy


@dataclass
class ImageScores:
    """All six metrics for one image."""

    image: str
    iou: float
    dice: float
    precision: float
    recall: float
    accuracy: float
    pq: float

    def __post_init__(self) -> None:
        for name in METRIC_NAMES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1] for {self.image}")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass
class MetricsReport:
    """Per-image scores plus mean and population std per metric."""

    per_image: list[ImageScores]
    mean: dict[str, float]
    std: dict[str, float]


def score_image(name: str, gt: np.ndarray, pred: np.ndarray) -> ImageScores:
    """All six metrics for one (gt, pred) pair; the match is computed once."""
    gt, pred = _check_masks(gt, pred)
    iou, dice, accuracy = _pixel_metrics(gt, pred)
    m = match_instances(gt, pred)
    precision, recall = _instance_pr(m)
    return ImageScores(
        image=name,
        iou=iou,
        dice=dice,
        precision=precision,
        recall=recall,
        accuracy=accuracy,
        pq=panoptic_quality(m),
    )


def aggregate(per_image: list[ImageScores]) -> MetricsReport:
    """Mean and population std of each metric across images, in input order."""
    if not per_image:
        raise ValueError("cannot aggregate an empty score list")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name in METRIC_NAMES:
        col = np.asarray([getattr(s, name) for s in per_image], dtype=np.float64)
        mean[name] = float(col.mean())
        std[name] = float(col.std(ddof=0))
    return MetricsReport(per_image=list(per_image), mean=mean, std=std)


def report_csv_text(report: MetricsReport) -> str:
    """Render a report as CSV with fixed columns and MEAN/STD footer rows."""
    lines = ["image," + ",".join(METRIC_NAMES)]
    for s in report.per_image:
        lines.append(s.image + "," + ",".join(repr(getattr(s, n)) for n in METRIC_NAMES))
    lines.append("MEAN," + ",".join(repr(report.mean[n]) for n in METRIC_NAMES))
    lines.append("STD," + ",".join(repr(report.std[n]) for n in METRIC_NAMES))
    return "\n".join(lines) + "\n"


def report_as_dict(report: MetricsReport) -> dict:
    return {
        "per_image": [dict(image=s.image, **s.as_dict()) for s in report.per_image],
        "mean": dict(report.mean),
        "std": dict(report.std),
    }
