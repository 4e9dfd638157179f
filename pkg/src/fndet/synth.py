"""Desk-scale stand-in for a traffic-sign benchmark and its detector.

Scenes are grayscale images of smooth value-noise texture with a few bright
sign shapes (circle, triangle, square plate) drawn with a half-contrast rim,
plus a larger number of plain distractor bars and ellipses. The stub detector exposes two things: sliding
template scores (its detections) and four banks of rectified, contrast-
compressed filter responses pooled to an S x S grid (its feature maps).

Sign contrast is drawn from a range wide enough that a fraction of signs fall
below the detector's score threshold while still exciting the feature maps.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .boxes import IMAGE, BoundingBox, iou
from .errors import GenerationError
from .featuremap import FeatureTensor
from .metrics import GroundTruth
from .regions import Detection

SHAPES = ("circle", "triangle", "rectangle")
# circle -> prohibitory, triangle -> danger, rectangle -> mandatory
SIGN_GROUPS = {"circle": "prohibitory", "triangle": "danger", "rectangle": "mandatory"}
FOG_VALUE = 0.9
RAIN_VALUE = 0.85
RAIN_ALPHA = (0.3, 0.6)
RIM_LEVEL = 0.5


@dataclass(frozen=True)
class SceneConfig:
    img_w: int = 256
    img_h: int = 256
    n_signs: tuple = (1, 3)
    sign_size: tuple = (20, 48)
    sign_contrast: tuple = (0.08, 0.45)
    n_clutter: tuple = (4, 10)
    clutter_size: tuple = (8, 48)
    clutter_contrast: tuple = (0.05, 0.30)
    max_retries: int = 200

    def __post_init__(self):
        for name in ("n_signs", "sign_size", "sign_contrast", "n_clutter",
                     "clutter_size", "clutter_contrast"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} must be an ascending non-negative pair, got {(lo, hi)}")
            object.__setattr__(self, name, (lo, hi))
        if self.img_w < 16 or self.img_h < 16:
            raise ValueError("images must be at least 16x16")
        if self.sign_size[0] < 8 or self.sign_size[1] > min(self.img_w, self.img_h):
            raise ValueError(f"sign_size {self.sign_size} does not fit the image")


@dataclass(frozen=True)
class WeatherConfig:
    mode: str = "clean"
    fog_beta: float = 0.5
    rain_density: float = 6.0  # streaks per 100 x 100 pixels
    rain_length: int = 14
    rain_blur: int = 3
    rain_dim: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("clean", "fog", "rain"):
            raise ValueError(f"unknown weather mode {self.mode!r}")
        if not 0.0 <= self.fog_beta <= 1.0:
            raise ValueError(f"fog_beta must lie in [0, 1], got {self.fog_beta}")
        if self.rain_density < 0:
            raise ValueError(f"rain_density must be >= 0, got {self.rain_density}")
        if self.rain_length < 1:
            raise ValueError(f"rain_length must be >= 1, got {self.rain_length}")
        if self.rain_blur < 1:
            raise ValueError(f"rain_blur must be >= 1, got {self.rain_blur}")
        if not 0.0 < self.rain_dim <= 1.0:
            raise ValueError(f"rain_dim must lie in (0, 1], got {self.rain_dim}")


@dataclass(frozen=True, eq=False)
class Scene:
    image: np.ndarray
    signs: tuple
    clutter: int
    seed: int
    weather: str = "clean"
    shapes: tuple = field(default=(), repr=False)

    @property
    def img_h(self):
        return self.image.shape[0]

    @property
    def img_w(self):
        return self.image.shape[1]


@dataclass(frozen=True, eq=False)
class StubDetectorOutput:
    detections: list
    feature_maps: list
    proposals: list


@dataclass(frozen=True)
class DetectorConfig:
    grid: int = 64
    template_sizes: tuple = (22, 31, 43)
    score_half: float = 0.15   # template contrast that maps to score 0.5
    std_penalty: float = 1.0
    compress: float = 0.01     # response level at which a feature reaches 0.5
    nms_size: int = 5          # on the half-resolution score grid
    min_score: float = 0.02


# --------------------------------------------------------------------------
# scene generation

def _value_noise(rng, h, w, grid):
    coarse = rng.random((grid + 1, grid + 1))
    ys = np.linspace(0, grid, h)
    xs = np.linspace(0, grid, w)
    return ndimage.map_coordinates(coarse, np.meshgrid(ys, xs, indexing="ij"), order=1)


def shape_mask(kind, w, h):
    """Boolean (h, w) mask of a shape filling its box."""
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    if kind == "circle":
        return ((xx - cx) / (w / 2.0)) ** 2 + ((yy - cy) / (h / 2.0)) ** 2 <= 1.0
    if kind == "triangle":
        # apex at top centre, base along the bottom row
        half = (yy + 0.5) / h * (w / 2.0)
        return np.abs(xx - cx) <= half
    if kind == "rectangle":
        return np.ones((h, w), dtype=bool)
    if kind == "bar":
        return np.ones((h, w), dtype=bool)
    raise ValueError(f"unknown shape {kind!r}")


def _sign_dims(kind, size):
    if kind == "triangle":
        return size, max(4, int(round(0.87 * size)))
    return size, size


def _place(rng, w, h, img_w, img_h, taken, cfg, pad=8):
    for _ in range(cfg.max_retries):
        x0 = int(rng.integers(2, img_w - w - 1))
        y0 = int(rng.integers(2, img_h - h - 1))
        box = BoundingBox(x0, y0, x0 + w - 1, y0 + h - 1, space=IMAGE)
        grown = BoundingBox(max(0, x0 - pad), max(0, y0 - pad), x0 + w - 1 + pad,
                            y0 + h - 1 + pad, space=IMAGE)
        if all(iou(grown, t) == 0.0 for t in taken):
            return box
    return None


def generate_scene(cfg=SceneConfig(), seed=0):
    """Render one scene; the same (cfg, seed) always yields the same scene."""
    rng = np.random.default_rng(seed)
    h, w = cfg.img_h, cfg.img_w
    img = 0.42 + 0.16 * (_value_noise(rng, h, w, 4) - 0.5) + 0.06 * (_value_noise(rng, h, w, 16) - 0.5)

    n_signs = int(rng.integers(cfg.n_signs[0], cfg.n_signs[1] + 1))
    signs, shapes, taken = [], [], []
    for _ in range(n_signs):
        kind = SHAPES[int(rng.integers(len(SHAPES)))]
        bw, bh = _sign_dims(kind, int(rng.integers(cfg.sign_size[0], cfg.sign_size[1] + 1)))
        box = _place(rng, bw, bh, w, h, taken, cfg)
        if box is None:
            raise GenerationError(
                f"seed {seed}: could not place sign {len(signs) + 1} of {n_signs}")
        taken.append(box)
        contrast = float(rng.uniform(*cfg.sign_contrast))
        mask = shape_mask(kind, bw, bh)
        rim = mask & ~ndimage.binary_erosion(mask, iterations=max(1, bw // 12))
        sl = (slice(box.y_min, box.y_max + 1), slice(box.x_min, box.x_max + 1))
        local = float(img[sl][mask].mean())
        patch = img[sl]
        patch[mask] = local + contrast
        patch[rim] = local + RIM_LEVEL * contrast
        signs.append(GroundTruth(box, SHAPES.index(kind)))
        shapes.append(kind)

    n_clutter = int(rng.integers(cfg.n_clutter[0], cfg.n_clutter[1] + 1))
    placed = 0
    for _ in range(n_clutter):
        if rng.random() < 0.5:
            kind = "bar"
            long_side = int(rng.integers(cfg.clutter_size[0] * 2, cfg.clutter_size[1] + 1))
            short_side = int(rng.integers(3, max(4, long_side // 4)))
            bw, bh = (long_side, short_side) if rng.random() < 0.5 else (short_side, long_side)
        else:
            kind = "circle"
            bw = int(rng.integers(cfg.clutter_size[0], cfg.clutter_size[1] + 1))
            bh = int(np.clip(bw * rng.uniform(0.4, 1.6), 4, cfg.clutter_size[1]))
        box = _place(rng, bw, bh, w, h, taken, cfg)
        if box is None:
            continue  # distractors are best-effort
        taken.append(box)
        placed += 1
        sign = 1.0 if rng.random() < 0.5 else -1.0
        contrast = sign * float(rng.uniform(*cfg.clutter_contrast))
        mask = shape_mask(kind, bw, bh)
        sl = (slice(box.y_min, box.y_max + 1), slice(box.x_min, box.x_max + 1))
        img[sl][mask] += contrast

    img = np.clip(img, 0.0, 1.0).astype(np.float32)
    return Scene(img, tuple(signs), placed, int(seed), "clean", tuple(shapes))


# --------------------------------------------------------------------------
# weather

def _rain_layer(rng, h, w, density, length):
    layer = np.zeros((h, w))
    n = int(round(density * h * w / 10000.0))
    angle = np.deg2rad(rng.uniform(60.0, 75.0))
    dx, dy = np.cos(angle), np.sin(angle)
    t = np.arange(length)
    for _ in range(n):
        x0, y0 = rng.uniform(-length, w), rng.uniform(-length, h)
        ln = max(1, int(round(length * rng.uniform(0.6, 1.0))))
        xs = np.round(x0 + dx * t[:ln]).astype(int)
        ys = np.round(y0 + dy * t[:ln]).astype(int)
        ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        layer[ys[ok], xs[ok]] = rng.uniform(*RAIN_ALPHA)
    return layer


def apply_weather(scene, weather):
    """Degrade a scene; ground truth is untouched.

    fog:  out = (1 - beta) * in + beta * 0.9
    rain: slanted bright streaks are alpha-composited, then the frame is
          box-blurred and dimmed, as rain renderers do for the wet-lens look.
    """
    if weather.mode == "clean":
        return scene
    img = scene.image.astype(np.float64)
    if weather.mode == "fog":
        out = (1.0 - weather.fog_beta) * img + weather.fog_beta * FOG_VALUE
    else:
        rng = np.random.default_rng([weather.seed, scene.seed])
        alpha = _rain_layer(rng, scene.img_h, scene.img_w, weather.rain_density, weather.rain_length)
        out = (1.0 - alpha) * img + alpha * RAIN_VALUE
        if weather.rain_blur > 1:
            out = ndimage.uniform_filter(out, weather.rain_blur, mode="reflect")
        out = out * weather.rain_dim
    return replace(scene, image=np.clip(out, 0.0, 1.0).astype(np.float32), weather=weather.mode)


# --------------------------------------------------------------------------
# stub detector

EDGE_SIGMAS = (1.0, 1.5, 2.0, 3.0)
BLOB_SMALL = (1.5, 2.0, 3.0, 4.0)
BLOB_LARGE = (5.0, 6.0, 8.0, 10.0)
EDGE_CHANNELS = (0, 16)


def _block_extrema(resp, grid):
    h, w = resp.shape
    by, bx = h // grid, w // grid
    if by < 1 or bx < 1:
        raise ValueError(f"response {h}x{w} is smaller than the {grid}x{grid} feature grid")
    views = [resp[i:by * grid:by, j:bx * grid:bx] for i in range(by) for j in range(bx)]
    return np.maximum.reduce(views), np.minimum.reduce(views)


def _bank(responses, grid, k):
    """Split each response into positive/negative halves, pool, then compress.

    Pooling before the monotone compression r / (r + k) gives the same result
    as compressing first, at a fraction of the cost.
    """
    chans = []
    for r in responses:
        hi, lo = _block_extrema(r, grid)
        chans += [np.maximum(hi, 0.0), np.maximum(-lo, 0.0)]
    stack = np.stack(chans, axis=2).astype(np.float64)
    return FeatureTensor(stack / (stack + k))


def _half(img):
    h, w = img.shape
    return img[:h - h % 2, :w - w % 2].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def feature_banks(image, cfg=DetectorConfig()):
    """Horizontal edges, vertical edges, small blobs and large blobs; 8 channels each.

    Edges are Gaussian derivatives at four scales; blobs are differences of
    Gaussians (centre sigma, surround 2 sigma). The large-blob bank runs at
    half resolution.
    """
    img = np.asarray(image, dtype=np.float32)
    g, k = cfg.grid, cfg.compress
    h_edge = [ndimage.gaussian_filter(img, s, order=(1, 0), truncate=3.0) for s in EDGE_SIGMAS]
    v_edge = [ndimage.gaussian_filter(img, s, order=(0, 1), truncate=3.0) for s in EDGE_SIGMAS]
    blur = {s: ndimage.gaussian_filter(img, s, truncate=3.0) for s in sorted(set(BLOB_SMALL) | {2 * s for s in BLOB_SMALL})}
    small = [blur[s] - blur[2 * s] for s in BLOB_SMALL]
    half = _half(img)
    hblur = {s: ndimage.gaussian_filter(half, s / 2, truncate=3.0) for s in sorted(set(BLOB_LARGE) | {2 * s for s in BLOB_LARGE})}
    large = [hblur[s] - hblur[2 * s] for s in BLOB_LARGE]
    return [_bank(h_edge, g, k), _bank(v_edge, g, k), _bank(small, g, k), _bank(large, g, k)]


@lru_cache(maxsize=None)
def _templates(kind, size):
    """Interior and surround masks at half resolution, centred on the array.

    The surround is a thin band just outside the shape, so a template smaller
    than the object sees object on both sides and scores low.
    """
    bw, bh = _sign_dims(kind, size)
    hw, hh = max(3, round(bw / 2)), max(3, round(bh / 2))
    margin = max(2, hw // 5)
    body = np.zeros((hh + 2 * margin + 2, hw + 2 * margin + 2), dtype=bool)
    body[margin + 1:margin + 1 + hh, margin + 1:margin + 1 + hw] = shape_mask(kind, hw, hh)
    interior = ndimage.binary_erosion(body, iterations=max(1, hw // 8))
    ring = ndimage.binary_dilation(body, iterations=margin) & ~ndimage.binary_dilation(body, iterations=1)
    return interior, ring, (bw, bh)


@lru_cache(maxsize=8)
def _kernel_ffts(shape, sizes):
    """Frequency responses of every (interior, ring) averaging kernel."""
    out = []
    for kind in SHAPES:
        for size in sizes:
            interior, ring, dims = _templates(kind, size)
            kin = interior / interior.sum()
            kring = ring / ring.sum()
            out.append((kind, dims, kin.shape,
                        sfft.rfft2(kin[::-1, ::-1], shape), sfft.rfft2(kring[::-1, ::-1], shape)))
    return out


def template_scores(image, cfg=DetectorConfig()):
    """Best template score on the half-resolution grid and the template index.

    A template's raw response is interior mean minus surround mean, less
    ``std_penalty`` times the interior standard deviation; it is mapped to
    [0, 1) as r / (r + score_half).
    """
    img = _half(np.asarray(image, dtype=np.float64))
    h, w = img.shape
    kernels_dims = [_templates(k, s)[0].shape for k in SHAPES for s in cfg.template_sizes]
    pad = max(max(d) for d in kernels_dims)
    padded = np.pad(img, pad, mode="reflect")
    shape = (sfft.next_fast_len(h + 3 * pad, real=True), sfft.next_fast_len(w + 3 * pad, real=True))
    f1 = sfft.rfft2(padded, shape)
    f2 = sfft.rfft2(padded * padded, shape)
    best = np.zeros((h, w))
    which = np.zeros((h, w), dtype=np.int64)
    kernels = _kernel_ffts(shape, tuple(cfg.template_sizes))
    for idx, (_, _, kshape, kin, kring) in enumerate(kernels):
        # full correlation; shift so entry (y, x) is the template centred at (y, x)
        oy = pad + kshape[0] - 1 - kshape[0] // 2
        ox = pad + kshape[1] - 1 - kshape[1] // 2
        crop = (slice(oy, oy + h), slice(ox, ox + w))
        m_in = sfft.irfft2(f1 * kin, shape)[crop]
        m2_in = sfft.irfft2(f2 * kin, shape)[crop]
        m_ring = sfft.irfft2(f1 * kring, shape)[crop]
        sd = np.sqrt(np.maximum(m2_in - m_in * m_in, 0.0))
        raw = np.maximum(m_in - m_ring - cfg.std_penalty * sd, 0.0)
        score = raw / (raw + cfg.score_half)
        better = score > best
        best[better] = score[better]
        which[better] = idx
    return best, which, kernels


def stub_detect(scene, lam=0.5, cfg=DetectorConfig()):
    """Detections at ``lam``, every proposal, and the four feature banks."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    best, which, kernels = template_scores(scene.image, cfg)
    peaks = best == ndimage.maximum_filter(best, size=cfg.nms_size, mode="constant")
    peaks &= best > cfg.min_score
    proposals = []
    h, w = scene.img_h, scene.img_w
    for y, x in zip(*np.nonzero(peaks)):
        kind, (bw, bh), _, _, _ = kernels[which[y, x]]
        cx, cy = 2 * x + 1, 2 * y + 1
        x0, y0 = cx - bw // 2, cy - bh // 2
        box = BoundingBox(max(0, x0), max(0, y0), min(w - 1, x0 + bw - 1), min(h - 1, y0 + bh - 1),
                          space=IMAGE)
        proposals.append(Detection(box, round(float(best[y, x]), 6), SHAPES.index(kind)))
    proposals.sort(key=lambda d: (-d.score, d.box.y_min, d.box.x_min))
    detections = [d for d in proposals if d.score >= lam]
    return StubDetectorOutput(detections, feature_banks(scene.image, cfg), proposals)
