import json

import pytest

from fndet.cli import main
from fndet.dataset import read_manifest, split_seed

SMALL = {"splits": {"train": 40, "test": 12, "calibration": 3},
         "train": {"epochs": 5, "hidden": [16, 8]}}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "cfg.json").write_text(json.dumps(SMALL))
    assert main(["gen", "--config", str(root / "cfg.json"), "--out", str(root / "data")]) == 0
    return root


def test_gen_layout(workdir):
    data = workdir / "data"
    for split in ("train-clean", "test-clean", "test-fog", "test-rain", "calibration"):
        assert (data / split / "manifest.json").is_file()
        assert (data / split / "features.fvec").is_file()
    _, clean = read_manifest(data / "test-clean")
    _, fog = read_manifest(data / "test-fog")
    assert len(clean) == 12
    # the weather splits reuse the clean test scenes
    assert [r["ground_truth"] for r in clean] == [r["ground_truth"] for r in fog]
    assert {r["weather"] for r in fog} == {"fog"}
    assert json.loads((data / "config.json").read_text())["splits"]["train"] == 40


def test_gen_refuses_existing_dir(workdir, capsys):
    assert main(["gen", "--config", str(workdir / "cfg.json"), "--out", str(workdir / "data")]) == 2
    assert "--force" in capsys.readouterr().err


def test_train_eval_sweep_report(workdir, capsys):
    cfg, data = str(workdir / "cfg.json"), workdir / "data"
    model = workdir / "m.fndm"
    assert main(["train", "--config", cfg, "--manifest", str(data / "train-clean"),
                 "--model", str(model)]) == 0
    log = (workdir / "m.fndm.train.csv").read_text().splitlines()
    assert log[0] == "epoch,loss,train_acc" and len(log) == 6
    assert "training accuracy" in capsys.readouterr().out

    pr = workdir / "pr.csv"
    assert main(["eval", "--config", cfg, "--manifest", str(data / "test-clean"),
                 "--model", str(model), "--out", str(pr)]) == 0
    assert pr.read_text().startswith("threshold,precision,recall\n")
    assert pr.with_suffix(".svg").read_text().startswith("<svg")
    summary = json.loads(pr.with_suffix(".summary.json").read_text())
    assert {"precision_at_recall", "base_rate", "sign_capture_rate"} <= set(summary)
    assert "precision at recall 0.80" in capsys.readouterr().out

    fn = workdir / "fn.csv"
    assert main(["sweep", "--config", cfg, "--manifest", str(data / "test-clean"),
                 "--out", str(fn)]) == 0
    rows = fn.read_text().splitlines()
    assert rows[0] == "lambda,fn_rate" and len(rows) == 22

    assert main(["report", str(pr), "--out", str(workdir / "r1.svg")]) == 0
    assert main(["report", str(fn), "--out", str(workdir / "r2.svg")]) == 0
    assert main(["report", str(pr), str(fn), "--out", str(workdir / "r3.svg")]) == 3


def test_exit_codes(workdir, tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.json"), "--manifest", "x",
                 "--model", "m"]) == 2
    (tmp_path / "bad.fndm").write_bytes(b"garbage")
    assert main(["eval", "--manifest", str(workdir / "data" / "test-clean"),
                 "--model", str(tmp_path / "bad.fndm"), "--out", str(tmp_path / "o.csv")]) == 3
    assert main(["sweep", "--manifest", str(workdir / "data" / "test-clean"),
                 "--lambdas", "0.5,0.1", "--out", str(tmp_path / "s.csv")]) == 2


def test_split_seeds_distinct():
    seeds = {split_seed(42, code, i) for code in (1, 2, 3) for i in range(200)}
    assert len(seeds) == 600


def test_single_class_training_split_exits_3(workdir, tmp_path):
    summary = json.loads((workdir / "data" / "summary.json").read_text())
    assert summary["calibration"]["failures"] == 0
    assert main(["train", "--manifest", str(workdir / "data" / "calibration"),
                 "--model", str(tmp_path / "m.fndm")]) == 3


def test_model_channel_mismatch_exits_3(workdir, tmp_path, capsys):
    import numpy as np
    from fndet import classifier
    from fndet.classifier import FailureClassifier
    from fndet.features import compute_stats
    rng = np.random.default_rng(0)
    m = FailureClassifier.initialize([5, 4, 1], rng, compute_stats(rng.normal(size=(10, 5))))
    classifier.save(m, tmp_path / "k5.fndm")
    assert main(["eval", "--manifest", str(workdir / "data" / "test-clean"),
                 "--model", str(tmp_path / "k5.fndm"), "--out", str(tmp_path / "o.csv")]) == 3
    assert "5 features" in capsys.readouterr().err


def test_sweep_threshold_extremes(workdir, tmp_path):
    out = tmp_path / "fn.csv"
    assert main(["sweep", "--manifest", str(workdir / "data" / "test-fog"),
                 "--lambdas", "0,1", "--out", str(out)]) == 0
    low, high = out.read_text().splitlines()[1:]
    assert low.startswith("0.000000,") and float(low.split(",")[1]) < 0.2
    assert high == "1.000000,1.000000"


def test_force_regenerates(workdir, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"splits": {"train": 2, "test": 2, "calibration": 1}}))
    out = tmp_path / "d"
    out.mkdir()
    (out / "stale.txt").write_text("x")
    assert main(["gen", "--config", str(cfg), "--out", str(out), "--force"]) == 0
    assert (out / "test-rain" / "manifest.json").is_file()
