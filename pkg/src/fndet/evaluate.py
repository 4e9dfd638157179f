"""Deployment-side scoring of manifests and comparisons between PR curves."""

from dataclasses import dataclass

import numpy as np

from .dataset import manifest_features, read_manifest, record_detections, record_ground_truth
from .errors import DimensionError, UndefinedMetricError
from .metrics import RegionLabel, fn_rate_sweep, pr_sweep, precision_at_recall
from .pipeline import captured_misses


@dataclass
class EvalResult:
    curve: list
    scores: np.ndarray
    labels: np.ndarray
    missed_signs: int
    captured_misses: int

    @property
    def base_rate(self):
        if self.labels.size == 0:
            raise UndefinedMetricError("no regions were extracted")
        return float(self.labels.mean())

    @property
    def capture_rate(self):
        """Share of missed signs that produced a failure-grade region at all."""
        if self.missed_signs == 0:
            raise UndefinedMetricError("capture rate undefined: no missed signs")
        return self.captured_misses / self.missed_signs

    def precision_at(self, target):
        return precision_at_recall(self.curve, target)

    def operating_point(self, target):
        """``(threshold, precision, recall)`` of the point precision_at reports."""
        for point in self.curve:
            if point[2] >= target:
                return point
        raise UndefinedMetricError(f"curve never reaches recall {target}")

    def summary(self, target=0.8):
        out = {"regions": int(self.labels.size), "failures": int(self.labels.sum()),
               "missed_signs": self.missed_signs, "captured_misses": self.captured_misses}
        for key, fn in (("base_rate", lambda: self.base_rate),
                        ("precision_at_recall", lambda: self.precision_at(target)),
                        ("sign_capture_rate", lambda: self.capture_rate)):
            try:
                out[key] = round(fn(), 6)
            except UndefinedMetricError:
                out[key] = None
        try:
            out["threshold"], _, out["region_recall"] = (round(v, 6) for v in self.operating_point(target))
        except UndefinedMetricError:
            out["threshold"] = out["region_recall"] = None
        out["recall_target"] = target
        return out


def evaluate_manifest(manifest, model, pipeline):
    """Run the region pipeline over a manifest and score every region."""
    results, channels = manifest_features(manifest, pipeline)
    if channels is not None and channels != model.input_dim:
        raise DimensionError(
            f"model expects {model.input_dim} features but the manifest tensors have {channels} channels")
    feats = [f for r in results for f in r.features]
    labels = np.array([int(f.label) for f in feats], dtype=np.int64)
    scores = model.predict(np.stack([f.values for f in feats])) if feats else np.zeros(0)
    curve = pr_sweep(zip(scores, (RegionLabel(v) for v in labels)))
    return EvalResult(curve, scores, labels,
                      sum(len(r.missed) for r in results),
                      sum(captured_misses(r, pipeline.gamma) for r in results))


def random_scores(n, seed):
    return np.random.default_rng(seed).random(n)


def best_precision_by_recall(curve):
    """Highest precision reached at each recall value of a curve."""
    out = {}
    for _, p, r in curve:
        key = round(r, 12)
        out[key] = max(out.get(key, 0.0), p)
    return out


def dominance_gaps(curve, baseline):
    """``precision(curve) - precision(baseline)`` at every recall both curves reach."""
    a, b = best_precision_by_recall(curve), best_precision_by_recall(baseline)
    return {r: a[r] - b[r] for r in sorted(set(a) & set(b))}


def sweep_manifest(manifest, lambdas, match_iou=0.5):
    _, records = read_manifest(manifest)
    per_image = [(record_detections(rec), record_ground_truth(rec)) for rec in records]
    return fn_rate_sweep(per_image, lambdas, match_iou)
