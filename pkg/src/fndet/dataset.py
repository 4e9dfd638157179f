"""Build labeled splits from synthetic scenes and read them back.

A split directory holds::

    manifest.json     list of per-image records (see ``scene_record``)
    features.fvec     every extracted region feature with its label
    fmaps/<id>.fmap   the stacked detector tensor of each image

Manifest ``detections`` keep every proposal with its score so that any
score threshold can be applied downstream; the threshold used when the split
was built only decides which regions were suppressed and labeled.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import IMAGE, BoundingBox
from .errors import DimensionError
from .featuremap import read_fmap, stack_channels, write_fmap
from .features import write_fvec
from .metrics import GroundTruth, RegionLabel
from .pipeline import PipelineConfig, captured_misses, process_image
from .regions import Detection
from .synth import DetectorConfig, apply_weather, generate_scene, stub_detect

MANIFEST = "manifest.json"
FEATURES = "features.fvec"


@dataclass
class SplitSummary:
    images: int = 0
    signs: int = 0
    missed: int = 0
    captured: int = 0
    failures: int = 0
    imposters: int = 0
    channels: int = 0
    features: list = field(default_factory=list, repr=False)

    def counts(self):
        return {"images": self.images, "signs": self.signs, "missed_signs": self.missed,
                "captured_misses": self.captured, "failures": self.failures,
                "imposters": self.imposters}


def _box_json(box):
    return box.as_list()


def scene_record(image_id, fmap_path, proposals, signs, img_w, img_h, weather):
    return {
        "image_id": image_id,
        "fmap_path": fmap_path,
        "detections": [{"box": _box_json(d.box), "score": d.score, "class": d.class_id}
                       for d in proposals],
        "ground_truth": [{"box": _box_json(g.box), "class": g.class_id} for g in signs],
        "img_w": img_w,
        "img_h": img_h,
        "weather": weather,
    }


def record_detections(rec):
    return [Detection(BoundingBox(*d["box"], space=IMAGE), float(d["score"]), int(d["class"]))
            for d in rec["detections"]]


def record_ground_truth(rec):
    return [GroundTruth(BoundingBox(*g["box"], space=IMAGE), int(g["class"]))
            for g in rec["ground_truth"]]


def write_manifest(path, records):
    Path(path).write_text(json.dumps(records, indent=1, sort_keys=True) + "\n")


def read_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    records = json.loads(path.read_text())
    if not isinstance(records, list):
        raise ValueError(f"{path}: manifest must be a JSON array of records")
    return path.parent, records


def build_dataset(scene_seeds, scene_cfg, weather, out_dir, pipeline=PipelineConfig(),
                  detector=DetectorConfig()):
    """Run detector and region pipeline over scenes, writing a split directory."""
    scene_seeds = list(scene_seeds)
    if not scene_seeds:
        raise ValueError("build_dataset needs at least one scene")
    out_dir = Path(out_dir)
    (out_dir / "fmaps").mkdir(parents=True, exist_ok=True)
    summary = SplitSummary()
    records = []
    for i, seed in enumerate(scene_seeds):
        scene = apply_weather(generate_scene(scene_cfg, seed), weather)
        out = stub_detect(scene, pipeline.lam, detector)
        tensor = stack_channels(out.feature_maps)
        image_id = f"{i:06d}"
        rel = f"fmaps/{image_id}.fmap"
        try:
            write_fmap(out_dir / rel, tensor)
        except OSError as exc:
            raise OSError(f"writing {out_dir / rel}: {exc}") from exc
        gts = list(scene.signs)
        res = process_image(tensor, out.detections, scene.img_w, scene.img_h, pipeline, gts, image_id)
        summary.images += 1
        summary.signs += len(gts)
        summary.missed += len(res.missed)
        summary.captured += captured_misses(res, pipeline.gamma)
        n_fail = sum(lab == RegionLabel.FAILURE for lab in res.labels)
        summary.failures += n_fail
        summary.imposters += len(res.labels) - n_fail
        summary.channels = tensor.channels
        summary.features.extend(res.features)
        records.append(scene_record(image_id, rel, out.proposals, gts, scene.img_w, scene.img_h,
                                    weather.mode))
    write_manifest(out_dir / MANIFEST, records)
    write_fvec(out_dir / FEATURES, summary.features, k=summary.channels)
    return summary


def manifest_features(path, pipeline=PipelineConfig()):
    """Re-run the region pipeline over a manifest's stored tensors.

    Returns ``(results, channels)`` with one ``ImageResult`` per record, in
    manifest order.
    """
    root, records = read_manifest(path)
    results, channels = [], None
    for rec in records:
        tensor = read_fmap(root / rec["fmap_path"])
        if channels is None:
            channels = tensor.channels
        elif tensor.channels != channels:
            raise DimensionError(
                f"{rec['fmap_path']}: {tensor.channels} channels, manifest started with {channels}")
        res = process_image(tensor, record_detections(rec), int(rec["img_w"]), int(rec["img_h"]),
                            pipeline, record_ground_truth(rec), rec["image_id"])
        results.append(res)
    return results, channels


def stack_labeled(results):
    """Feature matrix and 0/1 label vector over all regions of all images."""
    feats = [f for r in results for f in r.features]
    if not feats:
        return np.zeros((0, 0)), np.zeros(0, dtype=np.int64)
    return np.stack([f.values for f in feats]), np.array([int(f.label) for f in feats])


def split_seed(base_seed, split_code, index):
    """Independent 63-bit scene seed for (base seed, split, index)."""
    state = np.random.SeedSequence([int(base_seed), int(split_code), int(index)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


def relpath(path, start):
    return os.path.relpath(path, start)
