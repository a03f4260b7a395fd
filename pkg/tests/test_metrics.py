import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from coresetkit.metrics import (
    ImageScores,
    MatchResult,
    aggregate,
    match_instances,
    pairwise_metrics,
    panoptic_quality,
    report_csv_text,
    score_image,
)

import oracles


def square_mask(h, w, boxes):
    """boxes: list of (label, r0, r1, c0, c1)."""
    mask = np.zeros((h, w), dtype=np.int32)
    for label, r0, r1, c0, c1 in boxes:
        mask[r0:r1, c0:c1] = label
    return mask


def random_instance_mask(key, size=32, max_instances=4):
    rng = np.random.Generator(np.random.Philox(key=key))
    mask = np.zeros((size, size), dtype=np.int32)
    for label in range(1, int(rng.integers(0, max_instances + 1)) + 1):
        r = int(rng.integers(0, size - 6))
        c = int(rng.integers(0, size - 6))
        h = int(rng.integers(2, 6))
        w = int(rng.integers(2, 6))
        mask[r:r + h, c:c + w] = label
    return mask


# ---------------------------------------------------------------- matching

def test_identity_match():
    gt = square_mask(20, 20, [(1, 2, 12, 2, 12)])
    m = match_instances(gt, gt.copy())
    assert m.pairs == [(1, 1, 1.0)]
    assert m.fp == 0 and m.fn == 0


def test_shifted_square_below_threshold():
    # 10x10 square shifted so the overlap is 60 px of a 140 px union
    gt = square_mask(30, 30, [(1, 5, 15, 5, 15)])
    pred = square_mask(30, 30, [(1, 5, 15, 9, 19)])
    inter = np.count_nonzero((gt > 0) & (pred > 0))
    union = np.count_nonzero((gt > 0) | (pred > 0))
    assert (inter, union) == (60, 140)
    m = match_instances(gt, pred)
    assert m.pairs == []
    assert m.fn == 1 and m.fp == 1


def test_empty_pred_all_fn():
    gt = square_mask(40, 40, [(1, 0, 5, 0, 5), (2, 10, 15, 10, 15), (3, 20, 25, 20, 25)])
    m = match_instances(gt, np.zeros_like(gt))
    assert m.pairs == [] and m.fn == 3 and m.fp == 0


def test_match_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="differ"):
        match_instances(np.zeros((3, 3), int), np.zeros((4, 3), int))


def test_match_result_validation():
    with pytest.raises(ValueError, match="IoU"):
        MatchResult(pairs=[(1, 1, 0.5)], unmatched_gt=[], unmatched_pred=[])
    with pytest.raises(ValueError, match="more than one"):
        MatchResult(pairs=[(1, 1, 0.9), (1, 2, 0.8)], unmatched_gt=[], unmatched_pred=[])


def test_matching_equals_bruteforce_assignment():
    for key in range(25):
        gt = random_instance_mask(key * 2)
        pred = random_instance_mask(key * 2 + 1)
        m = match_instances(gt, pred)
        assert {(g, p) for g, p, _ in m.pairs} == oracles.oracle_optimal_matching(gt, pred)


# ---------------------------------------------------------------- pq

def test_pq_hand_value():
    # 1 TP at IoU 0.6 plus 1 FP: PQ = 0.6 / (1 + 0.5) = 0.4
    m = MatchResult(pairs=[(1, 1, 0.6)], unmatched_gt=[], unmatched_pred=[2])
    assert panoptic_quality(m) == pytest.approx(0.4, abs=1e-12)


def test_pq_perfect_and_empty():
    perfect = MatchResult(pairs=[(1, 1, 1.0)], unmatched_gt=[], unmatched_pred=[])
    assert panoptic_quality(perfect) == 1.0
    nothing = MatchResult(pairs=[], unmatched_gt=[], unmatched_pred=[])
    assert panoptic_quality(nothing) == 1.0
    misses = MatchResult(pairs=[], unmatched_gt=[1, 2], unmatched_pred=[9])
    assert panoptic_quality(misses) == 0.0


def test_pq_bounded_by_sq_and_rq():
    m = MatchResult(pairs=[(1, 1, 0.8), (2, 2, 0.6)], unmatched_gt=[3], unmatched_pred=[7])
    pq = panoptic_quality(m)
    sq = (0.8 + 0.6) / 2
    rq = 2 / (2 + 0.5 * 1 + 0.5 * 1)
    assert pq == pytest.approx(sq * rq, abs=1e-12)
    assert pq <= sq and pq <= rq


# ---------------------------------------------------------------- pixel metrics

def test_overlap_hand_values():
    # gt and pred both 100 px, overlapping on 50: iou = 1/3, dice = 1/2
    gt = square_mask(30, 30, [(1, 0, 10, 0, 10)])
    pred = square_mask(30, 30, [(1, 0, 10, 5, 15)])
    iou, dice, precision, recall, accuracy = pairwise_metrics(gt, pred)
    assert iou == pytest.approx(1 / 3, abs=1e-12)
    assert dice == pytest.approx(0.5, abs=1e-12)
    assert dice == pytest.approx(2 * iou / (1 + iou), abs=1e-12)


def test_perfect_prediction_all_ones():
    gt = square_mask(20, 20, [(1, 3, 9, 3, 9), (2, 12, 18, 12, 18)])
    assert pairwise_metrics(gt, gt.copy()) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_empty_empty_conventions():
    z = np.zeros((8, 8), dtype=np.int32)
    iou, dice, precision, recall, accuracy = pairwise_metrics(z, z.copy())
    assert (iou, dice, precision, recall, accuracy) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_empty_gt_nonempty_pred_scores_zero():
    z = np.zeros((8, 8), dtype=np.int32)
    pred = square_mask(8, 8, [(1, 0, 4, 0, 4)])
    iou, dice, precision, recall, accuracy = pairwise_metrics(z, pred)
    assert iou == 0.0 and dice == 0.0
    assert precision == 0.0  # hallucinated instance
    assert recall == 0.0  # nothing to recall, but pred is wrong
    assert accuracy == pytest.approx(1 - 16 / 64, abs=1e-12)


def test_pixel_metrics_match_loop_oracle():
    for key in range(6):
        gt = random_instance_mask(key + 100, size=16)
        pred = random_instance_mask(key + 200, size=16)
        iou, dice, _, _, accuracy = pairwise_metrics(gt, pred)
        oi, od, oa = oracles.oracle_pixel_metrics(gt, pred)
        assert iou == pytest.approx(oi, abs=1e-12)
        assert dice == pytest.approx(od, abs=1e-12)
        assert accuracy == pytest.approx(oa, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    gt=hnp.arrays(np.int32, (12, 12), elements=st.integers(0, 3)),
    pred=hnp.arrays(np.int32, (12, 12), elements=st.integers(0, 3)),
)
def test_dice_iou_identity(gt, pred):
    iou, dice, _, _, _ = pairwise_metrics(gt, pred)
    assert dice == pytest.approx(2 * iou / (1 + iou), abs=1e-12)


def test_relabeling_invariance():
    gt = random_instance_mask(7)
    pred = random_instance_mask(8)
    relabeled_gt = np.where(gt > 0, gt * 13 + 5, 0)
    relabeled_pred = np.where(pred > 0, pred * 7 + 2, 0)
    a = score_image("x", gt, pred)
    b = score_image("x", relabeled_gt, relabeled_pred)
    assert a == b


def test_transposition_invariance():
    gt = random_instance_mask(9, size=20)
    pred = random_instance_mask(10, size=20)
    a = score_image("x", gt, pred)
    b = score_image("x", gt.T.copy(), pred.T.copy())
    assert a == b


# ---------------------------------------------------------------- aggregation

def _scores(image, iou):
    return ImageScores(
        image=image, iou=iou, dice=iou, precision=iou, recall=iou, accuracy=iou, pq=iou
    )


def test_aggregate_hand_values():
    report = aggregate([_scores("a", 0.2), _scores("b", 0.4)])
    assert report.mean["iou"] == pytest.approx(0.3, abs=1e-12)
    assert report.std["iou"] == pytest.approx(0.1, abs=1e-12)  # population std


def test_aggregate_single_image_zero_std():
    report = aggregate([_scores("a", 0.7)])
    assert report.std == {k: 0.0 for k in report.std}


def test_aggregate_permutation_invariance():
    scores = [_scores("a", 0.1), _scores("b", 0.5), _scores("c", 0.9)]
    a = aggregate(scores)
    b = aggregate(scores[::-1])
    for k in a.mean:
        assert a.mean[k] == pytest.approx(b.mean[k], abs=1e-12)
        assert a.std[k] == pytest.approx(b.std[k], abs=1e-12)


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_scores_must_be_in_unit_interval():
    with pytest.raises(ValueError):
        _scores("a", 1.3)


def test_csv_layout():
    report = aggregate([_scores("img1", 0.5), _scores("img2", 1.0)])
    lines = report_csv_text(report).splitlines()
    assert lines[0] == "image,iou,dice,precision,recall,accuracy,pq"
    assert lines[1].startswith("img1,0.5,")
    assert lines[3].startswith("MEAN,0.75,")
    assert lines[4].startswith("STD,0.25,")
    assert len(lines) == 5
