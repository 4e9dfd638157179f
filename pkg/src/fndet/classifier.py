"""Fully connected failure/imposter classifier, trained with plain mini-batch SGD.

Hidden layers use ReLU, the single output unit a sigmoid. Inputs are
standardized with per-channel statistics frozen at training time, so a saved
model carries everything needed to score raw region features.

Model file layout (little-endian)::

    b"FNDM0001" | u32 L | L * u32 layer dims
    | per layer: W (in*out float64, row-major (in, out)), b (out float64)
    | mean (K float64) | std (K float64)
"""

from dataclasses import dataclass
from pathlib import Path
import struct
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import DimensionError, FormatError
from .features import NormStats, RegionFeatureVector, compute_stats, normalize_array

MODEL_MAGIC = b"FNDM0001"
P_CLIP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = 100
    seed: int = 42
    l2: float = 1e-4
    class_weight: Optional[float] = None  # None: imposter count / failure count
    hidden: tuple = (256, 64)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")
        if self.class_weight is not None and not self.class_weight > 0:
            raise ValueError(f"class_weight must be > 0, got {self.class_weight}")
        if any(h < 1 for h in self.hidden):
            raise ValueError(f"hidden sizes must be >= 1, got {self.hidden}")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


class FailureClassifier:
    """Weights ``W[l]`` of shape (in, out), biases ``b[l]`` of shape (out,)."""

    def __init__(self, weights, biases, stats: Optional[NormStats] = None):
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in biases]
        if not self.weights or len(self.weights) != len(self.biases):
            raise DimensionError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise DimensionError(f"layer {i} input {w.shape[0]} != previous output")
        if self.weights[-1].shape[1] != 1:
            raise DimensionError("the output layer must have a single unit")
        k = self.weights[0].shape[0]
        if stats is None:
            stats = NormStats(np.zeros(k), np.ones(k))
        if stats.mean.shape != (k,) or stats.std.shape != (k,):
            raise DimensionError(f"normalization stats do not have length {k}")
        self.stats = stats

    @classmethod
    def initialize(cls, layer_dims, rng, stats=None):
        """Glorot-uniform weights, zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, stats)

    @property
    def layer_dims(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    def params(self):
        return self.weights + self.biases

    def copy(self):
        return FailureClassifier(self.weights, self.biases,
                                 NormStats(self.stats.mean.copy(), self.stats.std.copy()))

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionError(
                f"model expects {self.input_dim} features, got shape {x.shape}")
        return x

    def activations(self, x):
        """Return per-layer pre-activations and activations for raw inputs ``x``."""
        a = normalize_array(self._check_input(x), self.stats)
        pre, acts = [], [a]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = np.maximum(z, 0.0) if i < len(self.weights) - 1 else expit(z)
            acts.append(a)
        return pre, acts

    def predict(self, x):
        """Failure scores in (0, 1) for an (n, K) array of raw features."""
        _, acts = self.activations(x)
        return np.clip(acts[-1][:, 0], P_CLIP, 1.0 - P_CLIP)


def forward(m, x):
    """Failure score of a single feature vector (raw, un-normalized)."""
    if isinstance(x, RegionFeatureVector):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"forward takes one vector, got shape {x.shape}")
    return float(m.predict(x)[0])


def loss(p, y, class_weight=1.0):
    """Weighted binary cross-entropy; ``class_weight`` scales the failure term."""
    p = np.clip(p, P_CLIP, 1.0 - P_CLIP)
    return -(class_weight * y * np.log(p) + (1 - y) * np.log1p(-p))


def objective(m, x, y, class_weight=1.0, l2=0.0):
    """Mean batch loss plus ``l2 / 2`` times the squared weight norm."""
    y = np.asarray(y, dtype=np.float64)
    _, acts = m.activations(x)
    data = float(np.mean(loss(acts[-1][:, 0], y, class_weight)))
    return data + 0.5 * l2 * sum(float(np.sum(w * w)) for w in m.weights)


def backward(m, x, y, class_weight=1.0, l2=0.0):
    """Gradients of :func:`objective` as ``(weight_grads, bias_grads)``."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    pre, acts = m.activations(x)
    n = y.shape[0]
    if n == 0:
        raise ValueError("backward needs a non-empty batch")
    p = acts[-1][:, 0]
    delta = ((class_weight * y * (p - 1.0) + (1.0 - y) * p) / n)[:, None]
    gw = [None] * len(m.weights)
    gb = [None] * len(m.weights)
    for i in range(len(m.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta + l2 * m.weights[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ m.weights[i].T) * (pre[i - 1] > 0)
    return gw, gb


def _labels_array(labels):
    y = np.asarray([int(v) for v in labels], dtype=np.float64)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 (imposter) or 1 (failure)")
    return y


def train(x, labels, cfg=TrainConfig(), log=None):
    """Fit a classifier on raw features ``x`` (n, K) with 0/1 ``labels``.

    ``log``, when given, is called once per epoch with
    ``(epoch, loss, train_acc)``. Returns ``(model, history)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = _labels_array(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionError(f"{x.shape} features for {y.shape[0]} labels")
    n_fail = int(y.sum())
    n_imp = y.shape[0] - n_fail
    if n_fail == 0 or n_imp == 0:
        raise ValueError(
            f"training data must contain both classes ({n_fail} failures, {n_imp} imposters)")
    weight = cfg.class_weight if cfg.class_weight is not None else n_imp / n_fail

    rng = np.random.default_rng(cfg.seed)
    dims = [x.shape[1], *cfg.hidden, 1]
    model = FailureClassifier.initialize(dims, rng, compute_stats(x))
    history = []
    n = x.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            gw, gb = backward(model, x[idx], y[idx], weight, cfg.l2)
            for w, g in zip(model.weights, gw):
                w -= cfg.learning_rate * g
            for b, g in zip(model.biases, gb):
                b -= cfg.learning_rate * g
        p = model.predict(x)
        epoch_loss = float(np.mean(loss(p, y, weight)))
        acc = float(np.mean((p >= 0.5) == (y == 1)))
        if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(a)) for a in model.params()):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        history.append((epoch, epoch_loss, acc))
        if log is not None:
            log(epoch, epoch_loss, acc)
    return model, history


def encode_model(m) -> bytes:
    dims = m.layer_dims
    parts = [MODEL_MAGIC, struct.pack(f"<I{len(dims)}I", len(dims), *dims)]
    for w, b in zip(m.weights, m.biases):
        parts += [w.astype("<f8").tobytes(), b.astype("<f8").tobytes()]
    parts += [m.stats.mean.astype("<f8").tobytes(), m.stats.std.astype("<f8").tobytes()]
    return b"".join(parts)


def decode_model(buf: bytes):
    if buf[:8] != MODEL_MAGIC:
        raise FormatError(f"bad model magic {buf[:8]!r}")
    try:
        (n_dims,) = struct.unpack_from("<I", buf, 8)
        if n_dims < 2:
            raise FormatError(f"model needs at least 2 layer dims, got {n_dims}")
        dims = struct.unpack_from(f"<{n_dims}I", buf, 12)
    except struct.error:
        raise FormatError("model header truncated") from None
    if min(dims) < 1:
        raise FormatError(f"invalid layer dims {dims}")
    n_floats = sum(a * b + b for a, b in zip(dims[:-1], dims[1:])) + 2 * dims[0]
    offset = 12 + 4 * n_dims
    if len(buf) != offset + 8 * n_floats:
        raise FormatError(f"model payload is {len(buf)} bytes, expected {offset + 8 * n_floats}")
    flat = np.frombuffer(buf, dtype="<f8", offset=offset, count=n_floats).astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise FormatError("model contains non-finite parameters")
    pos = 0

    def take(count, shape):
        nonlocal pos
        out = flat[pos:pos + count].reshape(shape)
        pos += count
        return out

    weights, biases = [], []
    for a, b in zip(dims[:-1], dims[1:]):
        weights.append(take(a * b, (a, b)))
        biases.append(take(b, (b,)))
    stats = NormStats(take(dims[0], (dims[0],)), take(dims[0], (dims[0],)))
    try:
        return FailureClassifier(weights, biases, stats)
    except DimensionError as exc:
        raise FormatError(str(exc)) from None


def save(m, path):
    Path(path).write_bytes(encode_model(m))


def load(path):
    try:
        return decode_model(Path(path).read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
