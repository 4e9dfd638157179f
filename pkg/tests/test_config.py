import json

import pytest

from fndet.config import DEFAULTS, ConfigError, RunConfig, load_config


def test_defaults_build():
    cfg = RunConfig()
    assert cfg.pipeline.lam == 0.5 and cfg.pipeline.channel_range == (0, 16)
    assert cfg.train.hidden == (256, 64)
    assert cfg.lambdas[0] == 0.0 and cfg.lambdas[-1] == 1.0 and len(cfg.lambdas) == 21
    assert set(cfg.weather) == {"clean", "fog", "rain"}


def test_partial_override_and_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 3, "train": {"epochs": 7}, "pipeline": {"lambda": 0.4}}))
    cfg = load_config(path)
    assert cfg.train.epochs == 7 and cfg.pipeline.lam == 0.4 and cfg.train.batch_size == 64
    again = RunConfig(json.loads(cfg.dumps()))
    assert again.dumps() == cfg.dumps()
    assert cfg.with_overrides(seed=9).raw["seed"] == 9


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"train": {"epochs": 0}},
    {"train": 5},
    {"pipeline": {"tau_rel": 2.0}},
    {"seed": -1},
    {"splits": {"train": 0}},
    {"sweep": {"lambdas": [0.5, 0.2]}},
    {"scene": {"img_w": 250}},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        RunConfig(raw)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_defaults_not_mutated():
    RunConfig({"train": {"epochs": 3}})
    assert DEFAULTS["train"]["epochs"] == 100
