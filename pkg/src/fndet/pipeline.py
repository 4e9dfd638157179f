"""Per-image false-negative pipeline shared by dataset building and evaluation."""

from dataclasses import dataclass
from typing import Optional

from .boxes import iou
from .featuremap import channel_max_pool
from .features import extract
from .metrics import label_region, match_detections, max_iou_vs_ground_truth
from .regions import locate_regions, suppress_detected


@dataclass(frozen=True)
class PipelineConfig:
    tau_rel: float = 0.5
    min_area: int = 2
    gamma: float = 0.5
    lam: float = 0.5
    overlap: float = 0.5
    match_iou: float = 0.5
    channel_range: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 < self.tau_rel <= 1.0:
            raise ValueError(f"tau_rel must lie in (0, 1], got {self.tau_rel}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError(f"overlap must lie in [0, 1], got {self.overlap}")
        if not 0.0 < self.match_iou <= 1.0:
            raise ValueError(f"match_iou must lie in (0, 1], got {self.match_iou}")
        if self.channel_range is not None:
            begin, end = self.channel_range
            if not 0 <= begin < end:
                raise ValueError(f"invalid channel range {self.channel_range}")
            object.__setattr__(self, "channel_range", (int(begin), int(end)))


@dataclass
class ImageResult:
    regions: list
    features: list
    missed: list          # ground truths the detector did not find at lambda
    labels: Optional[list] = None


def candidate_regions(tensor, detections, img_w, img_h, cfg):
    """Excited regions of a stacked tensor that no accepted detection explains."""
    saliency = channel_max_pool(tensor, cfg.channel_range)
    regions = locate_regions(saliency, img_w, img_h, cfg.tau_rel, cfg.min_area)
    return suppress_detected(regions, detections, cfg.lam, cfg.overlap)


def label_against_misses(regions, detections, gts, cfg):
    """Label regions by their best IoU against the ground truths missed at lambda.

    Signs the detector already found cannot be false negatives, so they are
    excluded from the comparison. Returns ``(labels, missed_gts)``.
    """
    found = match_detections(detections, gts, cfg.lam, cfg.match_iou)
    missed = [gt for gt, hit in zip(gts, found) if not hit]
    labels = [label_region(max_iou_vs_ground_truth(r, missed), cfg.gamma) for r in regions]
    return labels, missed


def process_image(tensor, detections, img_w, img_h, cfg, gts=None, image_id=""):
    regions = candidate_regions(tensor, detections, img_w, img_h, cfg)
    feats = extract(tensor, regions, image_id)
    if gts is None:
        return ImageResult(regions, feats, [])
    labels, missed = label_against_misses(regions, detections, gts, cfg)
    for f, lab in zip(feats, labels):
        f.label = lab
    return ImageResult(regions, feats, missed, labels)


def captured_misses(result, gamma):
    """How many missed ground truths have at least one failure-grade region."""
    return sum(1 for gt in result.missed
               if any(iou(r.image_box, gt.box) >= gamma for r in result.regions))
