"""Activation tensors, channel stacking and channel-wise max pooling.

Tensors are held as ``(H, W, C)`` float32 arrays with the channel axis
innermost, which is also the order used by the FMAP file format::

    b"FMAPv001" | u32 H | u32 W | u32 C | H*W*C float32   (all little-endian)
"""

from dataclasses import dataclass
from pathlib import Path
import struct

import numpy as np

from .errors import DimensionError, FormatError

FMAP_MAGIC = b"FMAPv001"
_HEADER = struct.Struct("<8sIII")


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """Non-mutable H x W x C activation volume."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise DimensionError(f"expected an (H, W, C) array, got shape {data.shape}")
        if min(data.shape) < 1:
            raise DimensionError(f"empty tensor dimension in shape {data.shape}")
        data = data.astype("<f4", copy=True)
        if not np.all(np.isfinite(data)):
            raise ValueError("feature tensor contains NaN or Inf")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_flat(cls, height, width, channels, values):
        values = np.asarray(values, dtype=np.float32)
        if values.size != height * width * channels:
            raise DimensionError(
                f"{values.size} values cannot fill a {height}x{width}x{channels} tensor")
        return cls(values.reshape(height, width, channels))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        return self.shape == other.shape and self.data.tobytes() == other.data.tobytes()

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """2-D reduction of a tensor; ``channel_range`` is the half-open interval pooled."""

    data: np.ndarray
    channel_range: tuple

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise DimensionError(f"saliency must be 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", _frozen(data.copy()))
        object.__setattr__(self, "channel_range", tuple(int(c) for c in self.channel_range))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def stack_channels(maps):
    """Concatenate tensors of equal spatial size along the channel axis, in list order."""
    maps = list(maps)
    if not maps:
        raise ValueError("stack_channels needs at least one tensor")
    h, w = maps[0].height, maps[0].width
    for i, m in enumerate(maps):
        if (m.height, m.width) != (h, w):
            raise DimensionError(
                f"tensor {i} is {m.height}x{m.width}, expected {h}x{w}")
    if len(maps) == 1:
        return maps[0]
    return FeatureTensor(np.concatenate([m.data for m in maps], axis=2))


def channel_max_pool(t, channel_range=None):
    """Per-cell maximum over channels ``[begin, end)`` (default: all channels)."""
    begin, end = (0, t.channels) if channel_range is None else channel_range
    if not (0 <= begin < end <= t.channels):
        raise ValueError(
            f"channel range [{begin}, {end}) invalid for a tensor with {t.channels} channels")
    return SaliencyMap(t.data[:, :, begin:end].max(axis=2), (begin, end))


def encode_fmap(t) -> bytes:
    return _HEADER.pack(FMAP_MAGIC, t.height, t.width, t.channels) + t.data.astype("<f4").tobytes()


def decode_fmap(buf: bytes):
    if len(buf) < _HEADER.size:
        raise FormatError(f"FMAP header truncated ({len(buf)} bytes)")
    magic, h, w, c = _HEADER.unpack_from(buf)
    if magic != FMAP_MAGIC:
        raise FormatError(f"bad FMAP magic {magic!r}")
    expected = _HEADER.size + 4 * h * w * c
    if len(buf) != expected:
        raise FormatError(f"FMAP payload is {len(buf)} bytes, expected {expected}")
    data = np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(h, w, c)
    return FeatureTensor(data)


def write_fmap(path, t):
    Path(path).write_bytes(encode_fmap(t))


def read_fmap(path):
    try:
        return decode_fmap(Path(path).read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
