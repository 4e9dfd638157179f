"""Run configuration: defaults, JSON loading and validation.

Every tunable lives in one nested JSON document. Missing keys take their
defaults and unknown keys are rejected, so a config file fully determines a
run. Command-line flags override the file.
"""

import copy
import json
from pathlib import Path

from .classifier import TrainConfig
from .pipeline import PipelineConfig
from .synth import EDGE_CHANNELS, DetectorConfig, SceneConfig, WeatherConfig


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "seed": 42,
    "scene": {
        "img_w": 256, "img_h": 256,
        "n_signs": [1, 3], "sign_size": [20, 48], "sign_contrast": [0.08, 0.45],
        "n_clutter": [4, 10], "clutter_size": [8, 48], "clutter_contrast": [0.05, 0.30],
    },
    "calibration_scene": {"n_signs": [1, 1], "sign_contrast": [0.35, 0.5]},
    "detector": {
        "grid": 64, "template_sizes": [22, 31, 43], "score_half": 0.15,
        "std_penalty": 1.0, "compress": 0.01,
    },
    "pipeline": {
        "tau_rel": 0.5, "min_area": 2, "gamma": 0.5, "lambda": 0.5, "overlap": 0.5,
        "match_iou": 0.5, "channel_range": list(EDGE_CHANNELS),
    },
    "weather": {
        "fog_beta": 0.5, "rain_density": 6.0, "rain_length": 14, "rain_blur": 3, "rain_dim": 0.75,
    },
    "splits": {"train": 1000, "test": 400, "calibration": 100},
    "train": {
        "learning_rate": 0.01, "batch_size": 64, "epochs": 100, "seed": 42, "l2": 1e-4,
        "class_weight": None, "hidden": [256, 64],
    },
    "eval": {"recall_target": 0.8},
    "sweep": {"lambdas": None, "step": 0.05},
}


def _merge(base, override, path=""):
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value
    return base


class RunConfig:
    """Validated view over the merged configuration dictionary."""

    def __init__(self, raw=None):
        self.raw = _merge(copy.deepcopy(DEFAULTS), raw or {})
        try:
            self._build()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    def _build(self):
        r = self.raw
        if not isinstance(r["seed"], int) or r["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer")
        scene = {k: tuple(v) if isinstance(v, list) else v for k, v in r["scene"].items()}
        self.scene = SceneConfig(**scene)
        cal = dict(scene)
        cal.update({k: tuple(v) for k, v in r["calibration_scene"].items()})
        self.calibration_scene = SceneConfig(**cal)
        det = dict(r["detector"])
        det["template_sizes"] = tuple(det["template_sizes"])
        self.detector = DetectorConfig(**det)
        if self.scene.img_w % self.detector.grid or self.scene.img_h % self.detector.grid:
            raise ConfigError("image size must be a multiple of the feature grid")
        p = dict(r["pipeline"])
        p["lam"] = p.pop("lambda")
        p["channel_range"] = None if p["channel_range"] is None else tuple(p["channel_range"])
        self.pipeline = PipelineConfig(**p)
        self.weather = {mode: WeatherConfig(mode=mode, seed=r["seed"], **r["weather"])
                        for mode in ("clean", "fog", "rain")}
        t = dict(r["train"])
        t["hidden"] = tuple(t["hidden"])
        self.train = TrainConfig(**t)
        for name, n in r["splits"].items():
            if not isinstance(n, int) or n < 1:
                raise ConfigError(f"splits.{name} must be a positive integer")
        self.splits = dict(r["splits"])
        target = r["eval"]["recall_target"]
        if not 0.0 < target <= 1.0:
            raise ConfigError("eval.recall_target must lie in (0, 1]")
        self.recall_target = float(target)
        self.lambdas = self._lambdas(r["sweep"])

    @staticmethod
    def _lambdas(sweep):
        if sweep["lambdas"] is not None:
            lams = [float(v) for v in sweep["lambdas"]]
        else:
            step = float(sweep["step"])
            if not 0.0 < step <= 1.0:
                raise ConfigError("sweep.step must lie in (0, 1]")
            n = int(round(1.0 / step))
            lams = [round(i * step, 10) for i in range(n + 1)]
        if not lams or any(b < a for a, b in zip(lams, lams[1:])):
            raise ConfigError("sweep lambdas must be a non-empty ascending list")
        return lams

    def with_overrides(self, seed=None):
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = seed
        return RunConfig(raw)

    def dumps(self):
        return json.dumps(self.raw, indent=1, sort_keys=True) + "\n"


def load_config(path=None):
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return RunConfig(raw)
