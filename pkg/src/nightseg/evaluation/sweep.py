"""The synthetic-ratio sweep: vary k, retrain, evaluate day and night.

For each k the pipeline runs plan -> synthesize -> train -> evaluate on
both held-out sets, everything seeded from (seed, k) so single points can
be reproduced in isolation. Results are returned as a SweepResult and,
when a work directory is given, written as sweep.csv plus a rendered
IoU-versus-k curve.
"""

from __future__ import annotations

import hashlib
import json
import logging
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..datasets import DatasetManifest, plan_mix, synthesize_mixed_dataset
from ..errors import DuplicateK
from ..imaging import load_image, load_labelmap, resize_image, resize_labels
from ..logs import write_csv_log
from ..seeding import derive_seed
from ..segmentation import SegTrainConfig, predict, train_segmenter
from .metrics import ConfusionMatrix, mean_acc, mean_iou

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("k", "miou_day", "miou_night", "macc_day", "macc_night")


@dataclass
class SweepResult:
    points: list = field(default_factory=list)  # dicts, sorted by k
    config_hash: str = ""

    def csv_rows(self) -> list:
        return [{
            "k": p["k"],
            "miou_day": p["mean_iou_day"],
            "miou_night": p["mean_iou_night"],
            "macc_day": p["mean_acc_day"],
            "macc_night": p["mean_acc_night"],
        } for p in self.points]


def evaluate_manifest(weights, manifest: DatasetManifest,
                      image_size=None) -> ConfusionMatrix:
    """Confusion matrix of a segmenter over every labeled record.

    The forward pass runs at `image_size` (defaults to the manifest
    resolution); predictions are then upsampled (nearest) to each label's
    own size so accumulation always happens at ground-truth resolution.
    """
    size = tuple(image_size) if image_size else tuple(manifest.resolution)
    cm = ConfusionMatrix(weights.num_classes)
    for img_path, label_path in manifest.labeled_pairs(require_all=True):
        img = resize_image(load_image(img_path), *size)
        gt = load_labelmap(label_path)
        pred = predict(weights, img)
        gh, gw = gt.data.shape
        if pred.data.shape != (gh, gw):
            pred = resize_labels(pred, gw, gh)
        cm.update(pred, gt)
    return cm


def _config_hash(seg_cfg: SegTrainConfig, k_values, seed: int,
                 translator_seed: int) -> str:
    payload = {
        "seg_cfg": {k: list(v) if isinstance(v, tuple) else v
                    for k, v in asdict(seg_cfg).items()},
        "k_values": [int(k) for k in k_values],
        "seed": seed,
        "translator_seed": translator_seed,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def run_sweep(base_manifest: DatasetManifest, k_values, translator,
              seg_cfg: SegTrainConfig, eval_sets: dict, seed: int,
              work_dir=None) -> SweepResult:
    """Train/evaluate once per k and collect the IoU/accuracy curve."""
    ks = [int(k) for k in k_values]
    if len(set(ks)) != len(ks):
        raise DuplicateK(f"k_values contain repeats: {ks}")
    ks.sort()
    if work_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="sweep-")
        work_dir = Path(tmp.name)
    else:
        tmp = None
        work_dir = Path(work_dir)
        work_dir.mkdir(parents=True, exist_ok=True)

    points = []
    try:
        for k in ks:
            try:
                k_dir = work_dir / f"k{k:05d}"
                plan = plan_mix(base_manifest, k,
                                derive_seed(seed, f"mix:k={k}"))
                mixed = synthesize_mixed_dataset(base_manifest, plan,
                                                 translator, k_dir)
                mixed.save(k_dir / "manifest.jsonl")
                cfg_k = replace(seg_cfg, seed=derive_seed(seed, f"seg:k={k}"))
                trained = train_segmenter(mixed, cfg_k,
                                          log_path=k_dir / "seg_log.csv")
                trained.weights.save(k_dir / "segmenter.weights")
                cm_day = evaluate_manifest(trained.weights, eval_sets["day"],
                                           image_size=seg_cfg.image_size)
                cm_night = evaluate_manifest(trained.weights, eval_sets["night"],
                                             image_size=seg_cfg.image_size)
            except Exception as exc:
                # tag the failing k but keep the original exception type
                exc.args = (f"sweep failed at k={k}: {exc}",)
                raise
            point = {
                "k": k,
                "mean_iou_day": mean_iou(cm_day),
                "mean_iou_night": mean_iou(cm_night),
                "mean_acc_day": mean_acc(cm_day),
                "mean_acc_night": mean_acc(cm_night),
            }
            log.info("sweep k=%d: day miou=%.4f night miou=%.4f", k,
                     point["mean_iou_day"], point["mean_iou_night"])
            points.append(point)

        result = SweepResult(
            points=points,
            config_hash=_config_hash(seg_cfg, ks, seed, translator.rng_seed),
        )
        if tmp is None:
            write_csv_log(work_dir / "sweep.csv", SWEEP_COLUMNS, result.csv_rows())
            _plot_curve(result, work_dir / "sweep_curve.png")
    finally:
        if tmp is not None:
            tmp.cleanup()
    return result


def _plot_curve(result: SweepResult, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ks = [p["k"] for p in result.points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, [p["mean_iou_night"] for p in result.points],
            marker="o", label="night mean IoU")
    ax.plot(ks, [p["mean_iou_day"] for p in result.points],
            marker="s", label="day mean IoU")
    ax.set_xlabel("synthetic night images in training set (k)")
    ax.set_ylabel("mean IoU")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
