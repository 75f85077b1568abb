"""Segmenter training on a labeled manifest.

Images and labels are resized to a fixed working size, optionally flipped
horizontally, and fed through the network under focal loss. The LR follows
the usual polynomial decay for dense prediction. Given the same manifest,
config and seed, reruns produce identical logs and weights.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.optim import Adam
from torch.optim.lr_scheduler import LambdaLR

from ..errors import EmptyDataset, LabelShapeMismatch, NonFiniteLoss
from ..imaging import load_image, load_labelmap, resize_image, resize_labels
from ..logs import write_csv_log
from ..seeding import derive_seed
from .losses import focal_loss_tensor
from .networks import SegmenterArch, build_segmenter
from .weights import SegmenterWeights, _state_to_numpy

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "iter", "focal_loss", "lr", "val_miou")


@dataclass
class SegTrainConfig:
    epochs: int = 20
    batch_size: int = 4
    learning_rate: float = 1e-3
    focal_gamma: float = 2.0
    class_weights: tuple = None
    image_size: tuple = (640, 360)  # (w, h) working resolution
    hflip: bool = True
    num_classes: int = 19
    widths: tuple = (16, 64, 128)
    mid_blocks: int = 5
    late_repeats: int = 2
    dilations: tuple = (1, 2, 4, 8)
    pool_bins: tuple = (1, 2, 4, 8)
    branch_channels: int = 0
    cache_images: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.focal_gamma < 0:
            raise ValueError(f"focal_gamma must be >= 0, got {self.focal_gamma}")
        if self.class_weights is not None:
            if len(self.class_weights) != self.num_classes:
                raise ValueError(
                    f"class_weights must have {self.num_classes} entries"
                )
            if any(w <= 0 for w in self.class_weights):
                raise ValueError("class weights must all be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if len(self.image_size) != 2 or min(self.image_size) < 8:
            raise ValueError(f"image_size components must be >= 8, got {self.image_size}")

    def arch(self) -> SegmenterArch:
        return SegmenterArch(
            num_classes=self.num_classes,
            widths=tuple(self.widths),
            mid_blocks=self.mid_blocks,
            late_repeats=self.late_repeats,
            dilations=tuple(self.dilations),
            pool_bins=tuple(self.pool_bins),
            branch_channels=self.branch_channels,
        )


@dataclass
class SegTrainResult:
    weights: SegmenterWeights
    loss_log: list = field(repr=False, default_factory=list)


def _labeled_pairs(manifest) -> list:
    """(image_path, label_path) pairs; every record must carry a label."""
    if hasattr(manifest, "labeled_pairs"):
        pairs = manifest.labeled_pairs(require_all=True)
    else:
        pairs = [(Path(img), Path(lab) if lab is not None else None)
                 for img, lab in manifest]
        for img, lab in pairs:
            if lab is None:
                raise LabelShapeMismatch(f"record {img} has no label")
    return pairs


class _PairLoader:
    """Loads (image, labels) at the working size with optional caching."""

    def __init__(self, pairs, size, cache: bool):
        self.pairs = pairs
        self.size = size
        self._cache = {} if cache else None

    def __len__(self):
        return len(self.pairs)

    def get(self, index: int):
        if self._cache is not None and index in self._cache:
            return self._cache[index]
        img_path, lab_path = self.pairs[index]
        img = load_image(img_path)
        lab = load_labelmap(lab_path)
        if lab.data.shape != img.data.shape[:2]:
            raise LabelShapeMismatch(
                f"record {img_path}: label is {lab.data.shape[1]}x"
                f"{lab.data.shape[0]} but image is {img.width}x{img.height}"
            )
        w, h = self.size
        x = resize_image(img, w, h).data.transpose(2, 0, 1)
        y = resize_labels(lab, w, h).data.astype(np.int64)
        item = (torch.from_numpy(np.ascontiguousarray(x)),
                torch.from_numpy(y))
        if self._cache is not None:
            self._cache[index] = item
        return item


def _poly_decay(total_steps: int, power: float = 0.9):
    def factor(step: int) -> float:
        return (1.0 - min(step, total_steps - 1) / total_steps) ** power

    return factor


def _validate_miou(net, loader: "_PairLoader") -> float:
    from ..evaluation import ConfusionMatrix, mean_iou

    was_training = net.training
    net.eval()
    cm = ConfusionMatrix(net.arch.num_classes)
    with torch.no_grad():
        for i in range(len(loader)):
            x, y = loader.get(i)
            pred = net(x.unsqueeze(0)).argmax(dim=1).squeeze(0)
            cm.update(pred.numpy().astype(np.uint8), y.numpy().astype(np.uint8))
    if was_training:
        net.train()
    return mean_iou(cm)


def train_segmenter(train_manifest, cfg: SegTrainConfig, val_manifest=None,
                    log_path=None) -> SegTrainResult:
    """Train a segmenter; returns weights plus the per-iteration loss log."""
    cfg.validate()
    pairs = _labeled_pairs(train_manifest)
    if not pairs:
        raise EmptyDataset("training manifest has no records")

    torch.manual_seed(cfg.seed)
    net = build_segmenter(cfg.arch())
    net.train()
    opt = Adam(net.parameters(), lr=cfg.learning_rate)
    loader = _PairLoader(pairs, cfg.image_size, cfg.cache_images)
    val_loader = None
    if val_manifest is not None:
        val_loader = _PairLoader(_labeled_pairs(val_manifest), cfg.image_size,
                                 cfg.cache_images)

    n_iters = max(1, len(loader) // cfg.batch_size)
    sched = LambdaLR(opt, _poly_decay(cfg.epochs * n_iters))
    weights_t = None
    if cfg.class_weights is not None:
        weights_t = torch.tensor(list(cfg.class_weights), dtype=torch.float32)

    rows = []
    for epoch in range(cfg.epochs):
        order = list(range(len(loader)))
        random.Random(derive_seed(cfg.seed, f"seg-shuffle:{epoch}")).shuffle(order)
        flip_rng = random.Random(derive_seed(cfg.seed, f"seg-flip:{epoch}"))

        for it in range(n_iters):
            xs, ys = [], []
            for j in range(cfg.batch_size):
                x, y = loader.get(order[(it * cfg.batch_size + j) % len(loader)])
                if cfg.hflip and flip_rng.random() < 0.5:
                    x = torch.flip(x, dims=(2,))
                    y = torch.flip(y, dims=(1,))
                xs.append(x)
                ys.append(y)
            batch_x = torch.stack(xs)
            batch_y = torch.stack(ys)

            loss = focal_loss_tensor(net(batch_x), batch_y,
                                     gamma=cfg.focal_gamma,
                                     class_weights=weights_t)
            value = loss.item()
            if not math.isfinite(value):
                raise NonFiniteLoss(
                    f"focal loss became {value} at epoch {epoch} iter {it}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()

            val_miou = None
            if val_loader is not None and it == n_iters - 1:
                val_miou = _validate_miou(net, val_loader)
            rows.append({
                "epoch": epoch,
                "iter": it,
                "focal_loss": value,
                "lr": opt.param_groups[0]["lr"],
                "val_miou": val_miou,
            })
            sched.step()

        log.info("seg epoch %d/%d: loss=%.4f%s", epoch + 1, cfg.epochs,
                 rows[-1]["focal_loss"],
                 "" if rows[-1]["val_miou"] is None
                 else f" val_miou={rows[-1]['val_miou']:.4f}")

    if log_path is not None:
        write_csv_log(log_path, LOG_COLUMNS, rows)

    weights = SegmenterWeights(arch=net.arch, rng_seed=cfg.seed,
                               state=_state_to_numpy(net))
    return SegTrainResult(weights=weights, loss_log=rows)
