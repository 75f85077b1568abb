"""Command-line entry point tying the pipeline together.

Commands:
  train-gan           train the day/night translators on unpaired sets
  convert             run a trained translator over a list of images
  make-night-dataset  replace k day records with synthetic night images
  train-seg           train the segmenter on a labeled manifest
  eval                score a segmenter (or precomputed predictions)
  sweep               retrain/evaluate across several k values
  infer               segment images, optionally converting night inputs
                      to the day domain first

Every config-driven command echoes its resolved configuration into the
experiment's config/ directory, and all stage seeds are derived from the
single experiment seed, so identical invocations yield identical outputs.
Exit codes: 0 on success, 2 when an input path is missing, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from PIL import Image

from .config import ExperimentConfig
from .datasets import (
    DatasetManifest,
    build_manifest,
    plan_mix,
    synthesize_mixed_dataset,
)
from .errors import MissingFile, NightsegError
from .evaluation import evaluate_manifest, metrics_report, run_sweep
from .evaluation.metrics import ConfusionMatrix
from .imaging import (
    labels_to_color,
    load_image,
    load_labelmap,
    resize_image,
    resize_labels,
    save_image,
    save_labelmap,
    to_signed,
    to_unit,
)
from .seeding import derive_seed
from .segmentation import SegmenterWeights, predict, train_segmenter
from .translation import TranslatorWeights, train_translator, translate_batch
from .translation.convert import generator_forward
from .weights_io import weights_digest

log = logging.getLogger("nightseg")


def _load_set(path_str: str, what: str, domain_rule: str = "fixed-day") -> DatasetManifest:
    if not path_str:
        raise MissingFile(f"config does not name a {what}")
    p = Path(path_str)
    if p.is_dir():
        return build_manifest(p, domain_rule=domain_rule)
    return DatasetManifest.load(p)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load_yaml(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.output_root = str(Path(args.out).resolve())
    return cfg


def cmd_train_gan(args) -> int:
    cfg = _load_config(args)
    paths = cfg.experiment_paths().ensure()
    day = _load_set(cfg.day_images, "day image set", "fixed-day")
    night = _load_set(cfg.night_images, "night image set", "fixed-night")
    cfg.gan.seed = derive_seed(cfg.seed, "gan")
    cfg.save_yaml(paths.config / "train-gan.yaml")

    result = train_translator(day, night, cfg.gan,
                              log_path=paths.logs / "gan_log.csv")
    out = paths.weights / "translator.weights"
    result.weights.save(out)
    print(f"translator weights: {out}")
    print(f"sha256: {weights_digest(out)}")
    return 0


def cmd_convert(args) -> int:
    weights = TranslatorWeights.load(args.weights)
    inputs = [Path(p) for p in args.inputs]
    if not inputs:
        log.warning("no input images given; nothing to do")
        return 0
    written = translate_batch(weights, args.direction, inputs, args.out)
    print(f"wrote {len(written)} image(s) to {args.out}")
    return 0


def cmd_make_night_dataset(args) -> int:
    cfg = _load_config(args)
    if args.k is not None:
        cfg.k = args.k
    paths = cfg.experiment_paths().ensure()
    manifest = _load_set(cfg.train_manifest, "training manifest")
    weights_path = cfg.translator_weights or str(paths.weights / "translator.weights")
    if not Path(weights_path).is_file():
        raise MissingFile(f"translator weights {weights_path} do not exist")
    weights = TranslatorWeights.load(weights_path)
    cfg.save_yaml(paths.config / "make-night-dataset.yaml")

    plan = plan_mix(manifest, cfg.k, derive_seed(cfg.seed, f"mix:k={cfg.k}"))
    out_dir = paths.images / f"mixed_k{cfg.k:05d}"
    mixed = synthesize_mixed_dataset(manifest, plan, weights, out_dir)
    mixed.save(out_dir / "manifest.jsonl")
    print(f"mixed manifest: {out_dir / 'manifest.jsonl'}")
    print(f"records: {len(mixed)} ({mixed.count(provenance='synthetic')} synthetic, "
          f"{mixed.count(provenance='real')} real)")
    return 0


def cmd_train_seg(args) -> int:
    cfg = _load_config(args)
    paths = cfg.experiment_paths().ensure()
    manifest = _load_set(cfg.train_manifest, "training manifest")
    val = None
    if cfg.eval_day_manifest:
        val = _load_set(cfg.eval_day_manifest, "validation manifest")
    cfg.seg.seed = derive_seed(cfg.seed, "seg")
    cfg.save_yaml(paths.config / "train-seg.yaml")

    result = train_segmenter(manifest, cfg.seg, val_manifest=val,
                             log_path=paths.logs / "seg_log.csv")
    out = paths.weights / "segmenter.weights"
    result.weights.save(out)
    print(f"segmenter weights: {out}")
    print(f"sha256: {weights_digest(out)}")
    return 0


def _eval_pred_dir(manifest: DatasetManifest, pred_dir: Path,
                   num_classes: int) -> ConfusionMatrix:
    cm = ConfusionMatrix(num_classes)
    for img_path, label_path in manifest.labeled_pairs(require_all=True):
        pred_path = pred_dir / f"{img_path.stem}.png"
        if not pred_path.is_file():
            raise MissingFile(f"no prediction for {img_path.stem!r} at {pred_path}")
        pred = load_labelmap(pred_path, num_classes=num_classes)
        gt = load_labelmap(label_path, num_classes=num_classes)
        gh, gw = gt.data.shape
        if pred.data.shape != (gh, gw):
            pred = resize_labels(pred, gw, gh)
        cm.update(pred, gt)
    return cm


def cmd_eval(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    if args.pred_dir:
        pred_dir = Path(args.pred_dir)
        if not pred_dir.is_dir():
            raise MissingFile(f"prediction directory {pred_dir} does not exist")
        cm = _eval_pred_dir(manifest, pred_dir, args.num_classes)
    else:
        if not args.weights:
            raise NightsegError("eval needs --weights (or --pred-dir)")
        weights = SegmenterWeights.load(args.weights)
        size = tuple(args.size) if args.size else None
        cm = evaluate_manifest(weights, manifest, image_size=size)
    report = metrics_report(cm)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.json").write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.k_values:
        cfg.k_values = tuple(int(v) for v in args.k_values.split(","))
    if not cfg.k_values:
        raise NightsegError("sweep needs k_values (config key or --k-values)")
    paths = cfg.experiment_paths().ensure()
    manifest = _load_set(cfg.train_manifest, "training manifest")
    weights_path = cfg.translator_weights or str(paths.weights / "translator.weights")
    if not Path(weights_path).is_file():
        raise MissingFile(f"translator weights {weights_path} do not exist")
    translator = TranslatorWeights.load(weights_path)
    eval_sets = {
        "day": _load_set(cfg.eval_day_manifest, "day eval manifest"),
        "night": _load_set(cfg.eval_night_manifest, "night eval manifest"),
    }
    cfg.save_yaml(paths.config / "sweep.yaml")

    result = run_sweep(manifest, cfg.k_values, translator, cfg.seg, eval_sets,
                       cfg.seed, work_dir=paths.reports / "sweep")
    csv_path = paths.reports / "sweep" / "sweep.csv"
    for point in result.points:
        print(f"k={point['k']}: day miou={point['mean_iou_day']:.4f} "
              f"night miou={point['mean_iou_night']:.4f}")
    print(f"sweep table: {csv_path}")
    print(f"config hash: {result.config_hash}")
    return 0


def cmd_infer(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    if not inputs:
        log.warning("no input images given; nothing to do")
        return 0
    seg = SegmenterWeights.load(args.seg_weights)
    translator = None
    if args.convert_night_to_day:
        if not args.translator_weights:
            raise NightsegError("--convert-night-to-day needs --translator-weights")
        translator = TranslatorWeights.load(args.translator_weights)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for path in inputs:
        img = load_image(path)
        t0 = time.perf_counter()
        if translator is not None:
            w, h = translator.arch.image_size
            small = to_signed(resize_image(img, w, h))
            day = to_unit(generator_forward(translator, small, "night2day"))
            img = resize_image(day, img.width, img.height)
            save_image(img, out_dir / f"{path.stem}_night2day.png")
        t1 = time.perf_counter()
        labels = predict(seg, img)
        t2 = time.perf_counter()
        save_labelmap(labels, out_dir / f"{path.stem}_pred.png")
        Image.fromarray(labels_to_color(labels)).save(
            out_dir / f"{path.stem}_color.png")
        log.info("%s: convert %.3fs, segment %.3fs", path.name, t1 - t0, t2 - t1)
    print(f"segmented {len(inputs)} image(s) into {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nightseg",
        description="Day/night translation and nighttime segmentation pipeline.",
    )
    parser.add_argument("--verbose", action="store_true",
                        help="log progress details to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="experiment YAML")
        p.add_argument("--seed", type=int, default=None,
                       help="override the experiment seed")
        p.add_argument("--out", default=None,
                       help="override the output root directory")

    p = sub.add_parser("train-gan", help="train the day/night translators")
    with_config(p)
    p.set_defaults(func=cmd_train_gan)

    p = sub.add_parser("convert", help="translate images with trained weights")
    p.add_argument("--weights", required=True, help="translator weights file")
    p.add_argument("--direction", choices=("day2night", "night2day"),
                   default="day2night")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("inputs", nargs="*", help="input images")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("make-night-dataset",
                       help="replace k day records with synthetic night images")
    with_config(p)
    p.add_argument("--k", type=int, default=None,
                   help="override the number of records to convert")
    p.set_defaults(func=cmd_make_night_dataset)

    p = sub.add_parser("train-seg", help="train the segmenter")
    with_config(p)
    p.set_defaults(func=cmd_train_seg)

    p = sub.add_parser("eval", help="evaluate a segmenter on a manifest")
    p.add_argument("--weights", default=None, help="segmenter weights file")
    p.add_argument("--manifest", required=True, help="labeled eval manifest")
    p.add_argument("--pred-dir", default=None,
                   help="score precomputed predictions (stem-matched PNGs) "
                        "instead of running the model")
    p.add_argument("--num-classes", type=int, default=19,
                   help="class count when scoring --pred-dir")
    p.add_argument("--size", type=int, nargs=2, metavar=("W", "H"),
                   default=None, help="forward-pass resolution")
    p.add_argument("--out", default=None, help="directory for metrics.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train/evaluate across several k values")
    with_config(p)
    p.add_argument("--k-values", default=None,
                   help="comma-separated k overrides, e.g. 0,50,100")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("infer", help="segment images end to end")
    p.add_argument("--seg-weights", required=True, help="segmenter weights file")
    p.add_argument("--translator-weights", default=None,
                   help="translator weights (for --convert-night-to-day)")
    p.add_argument("--convert-night-to-day", action="store_true",
                   help="convert inputs to the day domain before segmenting")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("inputs", nargs="*", help="input images")
    p.set_defaults(func=cmd_infer)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (MissingFile, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NightsegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
