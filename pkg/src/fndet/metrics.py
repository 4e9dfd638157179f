"""Failure/imposter labeling and alarm-quality metrics.

An excited region is a *failure* when its best IoU against the ground truth
reaches ``gamma`` and an *imposter* otherwise. Alarms raised by the failure
classifier are scored with

    precision = t_f / (t_f + f_a)        recall = t_f / (t_f + f_i)

where t_f counts failures alarmed, f_a imposters alarmed and f_i failures
left silent.
"""

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox, iou
from .errors import UndefinedMetricError

__all__ = [
    "GroundTruth", "RegionLabel", "EvalLedger", "iou", "max_iou_vs_ground_truth",
    "label_region", "precision", "recall", "pr_sweep", "precision_at_recall",
    "match_detections", "fn_rate_sweep", "write_curve_csv", "read_curve_csv",
]


@dataclass(frozen=True)
class GroundTruth:
    box: BoundingBox
    class_id: int = 0


class RegionLabel(enum.IntEnum):
    IMPOSTER = 0
    FAILURE = 1


@dataclass(frozen=True)
class EvalLedger:
    true_failures: int = 0
    false_alarms: int = 0
    missed_failures: int = 0

    def __post_init__(self):
        if min(self.true_failures, self.false_alarms, self.missed_failures) < 0:
            raise ValueError(f"negative count in {self}")

    def __add__(self, other):
        return EvalLedger(self.true_failures + other.true_failures,
                          self.false_alarms + other.false_alarms,
                          self.missed_failures + other.missed_failures)

    @classmethod
    def count(cls, alarms, labels):
        """Tally alarm decisions (truthy = alarm raised) against region labels."""
        tf = fa = fi = 0
        for alarm, label in zip(alarms, labels):
            is_failure = label == RegionLabel.FAILURE
            if alarm and is_failure:
                tf += 1
            elif alarm:
                fa += 1
            elif is_failure:
                fi += 1
        return cls(tf, fa, fi)


def max_iou_vs_ground_truth(region, gts):
    """Best IoU of the region's image box against any ground truth; 0 for none."""
    if region.image_box is None:
        raise ValueError("region has no image_box")
    return max((iou(region.image_box, gt.box) for gt in gts), default=0.0)


def label_region(g, gamma=0.5):
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return RegionLabel.FAILURE if g >= gamma else RegionLabel.IMPOSTER


def precision(ledger):
    denom = ledger.true_failures + ledger.false_alarms
    if denom == 0:
        raise UndefinedMetricError("precision undefined: no alarms raised")
    return ledger.true_failures / denom


def recall(ledger):
    denom = ledger.true_failures + ledger.missed_failures
    if denom == 0:
        raise UndefinedMetricError("recall undefined: no failure instances")
    return ledger.true_failures / denom


def pr_sweep(scored):
    """Precision/recall at every distinct score, from the highest threshold down.

    ``scored`` is an iterable of ``(score, label)``. A region raises an alarm
    at threshold t iff its score >= t, so equal scores enter together.
    Returns ``[(threshold, precision, recall), ...]``; empty when there are
    no failures at all (recall undefined everywhere).
    """
    scored = list(scored)
    if not scored:
        return []
    scores = np.array([s for s, _ in scored], dtype=np.float64)
    fail = np.array([lab == RegionLabel.FAILURE for _, lab in scored])
    n_fail = int(fail.sum())
    if n_fail == 0:
        return []
    order = np.argsort(-scores, kind="stable")
    scores, fail = scores[order], fail[order]
    tp = np.cumsum(fail)
    fp = np.cumsum(~fail)
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[scores[1:] != scores[:-1], True])
    return [(float(scores[i]), tp[i] / (tp[i] + fp[i]), tp[i] / n_fail) for i in ends]


def precision_at_recall(curve, target=0.8):
    """Precision at the highest threshold whose recall reaches ``target``."""
    for _, p, r in curve:
        if r >= target:
            return p
    raise UndefinedMetricError(f"curve never reaches recall {target}")


def match_detections(detections, gts, lam, match_iou=0.5):
    """Greedy matching of accepted detections to ground truth.

    Detections with score >= lam are taken highest score first (ties by input
    order); each claims the unmatched ground truth it overlaps most, provided
    IoU >= match_iou. Returns a list of booleans, True where the ground truth
    was matched.
    """
    matched = [False] * len(gts)
    accepted = sorted((d for d in detections if d.score >= lam), key=lambda d: -d.score)
    for det in accepted:
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts):
            if matched[j]:
                continue
            v = iou(det.box, gt.box)
            if v >= match_iou and v > best_iou:
                best, best_iou = j, v
        if best >= 0:
            matched[best] = True
    return matched


def fn_rate_sweep(detections_per_image, lambdas, match_iou=0.5):
    """Fraction of ground truths missed by the detector at each score threshold."""
    lambdas = list(lambdas)
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be sorted ascending")
    if not 0.0 < match_iou <= 1.0:
        raise ValueError(f"match_iou must lie in (0, 1], got {match_iou}")
    total = sum(len(gts) for _, gts in detections_per_image)
    if total == 0:
        raise UndefinedMetricError("fn rate undefined: no ground truths")
    out = []
    for lam in lambdas:
        missed = sum(m.count(False) for m in
                     (match_detections(dets, gts, lam, match_iou) for dets, gts in detections_per_image))
        out.append((lam, missed / total))
    return out


def write_curve_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.6f}" for v in row])


def read_curve_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [tuple(float(v) for v in row) for row in reader]
