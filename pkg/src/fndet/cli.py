"""Command-line front end: gen, train, eval, sweep, report.

Exit codes: 0 success, 2 configuration or I/O problem, 3 data or shape problem.
Diagnostics go to stderr; results go to the files named on the command line,
with a short human summary on stdout.
"""

import argparse
import json
import shutil
import sys
from pathlib import Path

from . import classifier
from .config import ConfigError, load_config
from .dataset import build_dataset, manifest_features, split_seed, stack_labeled
from .errors import DimensionError, FormatError, GenerationError, UndefinedMetricError
from .evaluate import evaluate_manifest, sweep_manifest
from .metrics import read_curve_csv, write_curve_csv
from .svg import line_plot

SPLITS = ("train-clean", "test-clean", "test-fog", "test-rain", "calibration")


class DataError(ValueError):
    """Input data cannot be used for the requested command (exit code 3)."""


def _config(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed) if getattr(args, "seed", None) is not None else cfg


def split_plan(cfg):
    """``(name, scene config, weather, seeds)`` for every split ``gen`` writes."""
    train = [split_seed(cfg.raw["seed"], 1, i) for i in range(cfg.splits["train"])]
    test = [split_seed(cfg.raw["seed"], 2, i) for i in range(cfg.splits["test"])]
    calib = [split_seed(cfg.raw["seed"], 3, i) for i in range(cfg.splits["calibration"])]
    w = cfg.weather
    return [
        ("train-clean", cfg.scene, w["clean"], train),
        ("test-clean", cfg.scene, w["clean"], test),
        ("test-fog", cfg.scene, w["fog"], test),
        ("test-rain", cfg.scene, w["rain"], test),
        ("calibration", cfg.calibration_scene, w["clean"], calib),
    ]


def build_split(cfg, out_dir, name):
    for split, scene_cfg, weather, seeds in split_plan(cfg):
        if split == name:
            return build_dataset(seeds, scene_cfg, weather, Path(out_dir) / split,
                                 cfg.pipeline, cfg.detector)
    raise ValueError(f"unknown split {name!r}")


def cmd_gen(args):
    cfg = _config(args)
    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise ConfigError(f"{out} is not empty; pass --force to overwrite")
        for name in SPLITS:
            shutil.rmtree(out / name, ignore_errors=True)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps())
    counts = {}
    for name in SPLITS:
        summary = build_split(cfg, out, name)
        counts[name] = summary.counts()
        c = counts[name]
        print(f"{name}: {c['images']} images, {c['signs']} signs, {c['missed_signs']} missed, "
              f"{c['failures']} failure / {c['imposters']} imposter regions")
    (out / "summary.json").write_text(json.dumps(counts, indent=1, sort_keys=True) + "\n")
    return 0


def _log_path(model_path):
    return Path(str(model_path) + ".train.csv")


def cmd_train(args):
    cfg = _config(args)
    results, _ = manifest_features(args.manifest, cfg.pipeline)
    x, y = stack_labeled(results)
    n_fail = int(y.sum())
    if n_fail == 0 or n_fail == y.size:
        raise DataError(f"{args.manifest}: need both labels to train, found {n_fail} failures "
                        f"among {y.size} regions")
    model, history = classifier.train(x, y, cfg.train)
    classifier.save(model, args.model)
    log = args.log or _log_path(args.model)
    with open(log, "w") as fh:
        fh.write("epoch,loss,train_acc\n")
        for epoch, loss, acc in history:
            fh.write(f"{epoch},{loss:.6f},{acc:.6f}\n")
    print(f"trained on {y.size} regions ({n_fail} failures); "
          f"final loss {history[-1][1]:.4f}, training accuracy {history[-1][2]:.4f}")
    return 0


def cmd_eval(args):
    cfg = _config(args)
    model = classifier.load(args.model)
    res = evaluate_manifest(args.manifest, model, cfg.pipeline)
    out = Path(args.out)
    write_curve_csv(out, ["threshold", "precision", "recall"], res.curve)
    svg = Path(args.svg) if args.svg else out.with_suffix(".svg")
    svg.write_text(line_plot([("failure classifier", [(r, p) for _, p, r in res.curve])],
                             "recall", "precision", "failure alarms"))
    summary = res.summary(cfg.recall_target)
    out.with_suffix(".summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    p = summary["precision_at_recall"]
    if p is None:
        print(f"precision at recall {cfg.recall_target:.2f}: undefined")
    else:
        print(f"precision at recall {cfg.recall_target:.2f}: {p:.4f} "
              f"(threshold {summary['threshold']}, region-level recall {summary['region_recall']})")
    print(f"failure base rate {summary['base_rate']} over {summary['regions']} regions; "
          f"sign-level capture rate {summary['sign_capture_rate']} "
          f"({summary['captured_misses']} of {summary['missed_signs']} missed signs have a failure region)")
    return 0


def _parse_lambdas(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --lambdas value {text!r}") from None


def cmd_sweep(args):
    cfg = _config(args)
    lambdas = _parse_lambdas(args.lambdas) if args.lambdas else cfg.lambdas
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("--lambdas must be ascending")
    curve = sweep_manifest(args.manifest, lambdas, cfg.pipeline.match_iou)
    write_curve_csv(args.out, ["lambda", "fn_rate"], curve)
    for lam, rate in curve:
        if abs(lam - cfg.pipeline.lam) < 1e-9:
            print(f"fn rate at lambda {lam:.2f}: {rate:.4f}")
    return 0


def cmd_report(args):
    series, kinds = [], set()
    for path in args.csv:
        header, rows = read_curve_csv(path)
        if header == ["threshold", "precision", "recall"]:
            kinds.add("pr")
            series.append((Path(path).stem, [(r[2], r[1]) for r in rows]))
        elif header == ["lambda", "fn_rate"]:
            kinds.add("fn")
            series.append((Path(path).stem, [(r[0], r[1]) for r in rows]))
        else:
            raise DataError(f"{path}: unrecognised CSV header {header}")
    if len(kinds) != 1:
        raise DataError("report inputs must all be PR curves or all be fn-rate curves")
    if kinds == {"pr"}:
        svg = line_plot(series, "recall", "precision", "precision vs recall")
    else:
        svg = line_plot(series, "minimum score threshold", "false negative rate",
                        "detector false negatives")
    Path(args.out).write_text(svg)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fndet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the configured base seed")

    p = sub.add_parser("gen", help="generate train/test/calibration splits")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the failure classifier on a split")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--log", help="training log CSV (default: <model>.train.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="precision/recall of failure alarms on a split")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="PR curve CSV to write")
    p.add_argument("--svg", help="plot path (default: alongside the CSV)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="detector false-negative rate over score thresholds")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--lambdas", help="comma-separated ascending thresholds")
    p.add_argument("--out", required=True, help="CSV to write")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="merge curve CSVs into one SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GenerationError, OSError) as exc:
        print(f"fndet {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DataError, DimensionError, FormatError, UndefinedMetricError, ValueError) as exc:
        print(f"fndet {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
