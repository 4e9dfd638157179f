"""Per-region feature vectors: the channel-wise maximum inside each region box.

Labeled batches are stored in the FVEC format::

    b"FVECv001" | u32 count | u32 K | count * (u8 label | K float64)

with label 0 = imposter, 1 = failure, 255 = unlabeled (little-endian).
"""

from dataclasses import dataclass
from pathlib import Path
import struct
from typing import Optional

import numpy as np

from .errors import DimensionError, FormatError
from .metrics import RegionLabel

FVEC_MAGIC = b"FVECv001"
UNLABELED = 255
STD_FLOOR = 1e-8
_HEADER = struct.Struct("<8sII")


@dataclass(eq=False)
class RegionFeatureVector:
    values: np.ndarray
    label: Optional[RegionLabel] = None
    source_region: object = None
    image_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DimensionError(f"feature vector must be 1-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains NaN or Inf")

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def scale(self):
        return np.maximum(self.std, STD_FLOOR)


def extract(v, regions, image_id=""):
    """One K-length vector per region: max over the box of every channel."""
    out = []
    for r in regions:
        b = r.box
        if b.x_max >= v.width or b.y_max >= v.height:
            raise DimensionError(
                f"region box {b.as_list()} exceeds the {v.height}x{v.width} tensor")
        block = v.data[b.y_min:b.y_max + 1, b.x_min:b.x_max + 1, :]
        out.append(RegionFeatureVector(block.max(axis=(0, 1)), None, r, image_id))
    return out


def as_matrix(batch):
    """Stack vectors into an (n, K) float64 array."""
    if not batch:
        raise ValueError("empty batch")
    k = len(batch[0])
    if any(len(f) != k for f in batch):
        raise DimensionError("feature vectors of different lengths in one batch")
    return np.stack([f.values for f in batch])


def compute_stats(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("cannot compute normalization stats from an empty batch")
    mean = x.sum(axis=0) / x.shape[0]
    std = np.sqrt(((x - mean) ** 2).sum(axis=0) / x.shape[0])
    return NormStats(mean, std)


def normalize_array(x, stats):
    return (np.asarray(x, dtype=np.float64) - stats.mean) / stats.scale


def denormalize_array(z, stats):
    return np.asarray(z, dtype=np.float64) * stats.scale + stats.mean


def normalize(batch, stats=None):
    """Standardize each channel; fresh stats come from the batch when none are given."""
    if stats is None:
        if not batch:
            raise ValueError("empty batch and no normalization stats supplied")
        stats = compute_stats(as_matrix(batch))
    if not batch:
        return [], stats
    z = normalize_array(as_matrix(batch), stats)
    return [RegionFeatureVector(row, f.label, f.source_region, f.image_id)
            for row, f in zip(z, batch)], stats


def denormalize(batch, stats):
    if not batch:
        return []
    x = denormalize_array(as_matrix(batch), stats)
    return [RegionFeatureVector(row, f.label, f.source_region, f.image_id)
            for row, f in zip(x, batch)]


def _label_byte(label):
    return UNLABELED if label is None else int(label)


def encode_fvec(values, labels) -> bytes:
    values = np.asarray(values, dtype="<f8")
    n, k = values.shape
    labels = np.asarray(labels, dtype=np.uint8)
    if labels.shape != (n,):
        raise DimensionError(f"{labels.shape[0]} labels for {n} vectors")
    rec = np.zeros(n, dtype=np.dtype([("label", "u1"), ("values", "<f8", (k,))]))
    rec["label"] = labels
    rec["values"] = values
    return _HEADER.pack(FVEC_MAGIC, n, k) + rec.tobytes()


def decode_fvec(buf: bytes):
    """Return ``(values (n, K) float64, labels (n,) uint8)``."""
    if len(buf) < _HEADER.size:
        raise FormatError(f"FVEC header truncated ({len(buf)} bytes)")
    magic, n, k = _HEADER.unpack_from(buf)
    if magic != FVEC_MAGIC:
        raise FormatError(f"bad FVEC magic {magic!r}")
    expected = _HEADER.size + n * (1 + 8 * k)
    if len(buf) != expected:
        raise FormatError(f"FVEC payload is {len(buf)} bytes, expected {expected}")
    rec = np.frombuffer(buf, offset=_HEADER.size, count=n,
                        dtype=np.dtype([("label", "u1"), ("values", "<f8", (k,))]))
    values = np.array(rec["values"], dtype=np.float64).reshape(n, k)
    return values, np.array(rec["label"], dtype=np.uint8)


def write_fvec(path, batch, k=None):
    """Write a batch; ``k`` is only needed to write an empty one."""
    if batch:
        values = as_matrix(batch)
    elif k is not None:
        values = np.zeros((0, k))
    else:
        raise ValueError("an empty FVEC batch needs an explicit K")
    Path(path).write_bytes(encode_fvec(values, [_label_byte(f.label) for f in batch]))


def read_fvec(path):
    """Load a labeled batch as RegionFeatureVector objects."""
    try:
        values, labels = decode_fvec(Path(path).read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return [RegionFeatureVector(v, None if lab == UNLABELED else RegionLabel(int(lab)))
            for v, lab in zip(values, labels)]
