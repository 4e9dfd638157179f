"""Excited-region localization on a saliency map.

Binarize relative to the map maximum, group true cells into 8-connected
components, map component boxes from feature cells to image pixels, and drop
regions already explained by an accepted detection.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .boxes import FEATURE, IMAGE, BoundingBox, iou
from .featuremap import SaliencyMap

# 8-connectivity neighbours already visited in a raster scan
_PRIOR = ((-1, -1), (-1, 0), (-1, 1), (0, -1))


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    score: float
    class_id: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class ExcitedRegion:
    box: BoundingBox
    peak_value: float
    area_cells: int
    image_box: Optional[BoundingBox] = None
    cells: tuple = field(default=(), repr=False, compare=False)


def binarize(saliency, tau_rel=0.5):
    """Mask of cells strictly above ``tau_rel`` times the map maximum."""
    if not 0.0 < tau_rel <= 1.0:
        raise ValueError(f"tau_rel must lie in (0, 1], got {tau_rel}")
    s = saliency.data if isinstance(saliency, SaliencyMap) else np.asarray(saliency)
    if not np.all(np.isfinite(s)):
        raise ValueError("saliency contains NaN or Inf")
    peak = float(s.max())
    if peak <= 0.0:
        return np.zeros(s.shape, dtype=bool)
    return s > tau_rel * peak


def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def connected_components(mask, min_area=2, values=None):
    """8-connected components of ``mask`` as regions in feature space.

    ``values`` (a saliency map or array of the same shape) supplies each
    region's peak; without it every peak is 1.0. Regions come back sorted by
    descending peak, then by (y_min, x_min).
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if values is not None:
        values = values.data if isinstance(values, SaliencyMap) else np.asarray(values)
        if values.shape != mask.shape:
            raise ValueError(f"values shape {values.shape} does not match mask {mask.shape}")
    h, w = mask.shape
    labels = np.full((h, w), -1, dtype=np.int64)
    parent = []

    # first pass: provisional labels with union-find over equivalences
    for y, x in zip(*np.nonzero(mask)):
        roots = []
        for dy, dx in _PRIOR:
            ny, nx = y + dy, x + dx
            if 0 <= ny and 0 <= nx < w and labels[ny, nx] >= 0:
                roots.append(_find(parent, labels[ny, nx]))
        if not roots:
            labels[y, x] = len(parent)
            parent.append(len(parent))
            continue
        root = min(roots)
        for r in roots:
            parent[r] = root
        labels[y, x] = root

    groups = {}
    for y, x in zip(*np.nonzero(mask)):
        groups.setdefault(_find(parent, labels[y, x]), []).append((int(y), int(x)))

    regions = []
    for cells in groups.values():
        if len(cells) < min_area:
            continue
        ys = [c[0] for c in cells]
        xs = [c[1] for c in cells]
        peak = 1.0 if values is None else float(max(values[c] for c in cells))
        box = BoundingBox(min(xs), min(ys), max(xs), max(ys), space=FEATURE)
        regions.append(ExcitedRegion(box, peak, len(cells), cells=tuple(sorted(cells))))
    regions.sort(key=lambda r: (-r.peak_value, r.box.y_min, r.box.x_min))
    return regions


def _ceil_div(a, b):
    return -((-a) // b)


def feature_box_to_image(box, feat_w, feat_h, img_w, img_h):
    """Pixel footprint of a feature-space box, clamped to the image."""
    x0 = (box.x_min * img_w) // feat_w
    y0 = (box.y_min * img_h) // feat_h
    x1 = _ceil_div((box.x_max + 1) * img_w, feat_w) - 1
    y1 = _ceil_div((box.y_max + 1) * img_h, feat_h) - 1
    clamp = lambda v, hi: max(0, min(v, hi - 1))  # noqa: E731
    return BoundingBox(clamp(x0, img_w), clamp(y0, img_h),
                       clamp(x1, img_w), clamp(y1, img_h), space=IMAGE)


def to_image_space(region, feat_w, feat_h, img_w, img_h):
    if min(feat_w, feat_h, img_w, img_h) < 1:
        raise ValueError("all dimensions must be >= 1")
    return replace(region, image_box=feature_box_to_image(region.box, feat_w, feat_h, img_w, img_h))


def suppress_detected(regions, detections, lam=0.5, overlap=0.5):
    """Drop regions whose image box overlaps an accepted detection at IoU >= overlap."""
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    accepted = [d.box for d in detections if d.score >= lam]
    kept = []
    for r in regions:
        if r.image_box is None:
            raise ValueError("region has no image_box; call to_image_space first")
        if not any(iou(r.image_box, b) >= overlap for b in accepted):
            kept.append(r)
    return kept


def locate_regions(saliency, img_w, img_h, tau_rel=0.5, min_area=2):
    """Binarize, label components and attach image-space boxes in one step."""
    mask = binarize(saliency, tau_rel)
    regions = connected_components(mask, min_area, values=saliency)
    return [to_image_space(r, saliency.width, saliency.height, img_w, img_h) for r in regions]
