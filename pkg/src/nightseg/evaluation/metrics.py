"""Confusion-matrix accumulation and the metrics derived from it.

Counts are integer-exact: counts[g][p] is the number of pixels whose
ground truth is g and whose prediction is p. Pixels whose ground truth is
IGNORE are tallied separately and never influence any metric. Classes that
appear in neither ground truth nor predictions are *undefined* and are
excluded from the means rather than counted as zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import ClassOutOfRange, EmptyMatrix, KMismatch, ShapeError
from ..imaging import IGNORE, LabelMap


class ConfusionMatrix:
    """K x K tally of (ground truth, prediction) pixel pairs."""

    def __init__(self, num_classes: int, counts=None, ignored_pixels: int = 0):
        if num_classes < 1:
            raise ValueError(f"need at least one class, got {num_classes}")
        self.num_classes = num_classes
        if counts is None:
            counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (num_classes, num_classes):
                raise ShapeError(
                    f"counts must be {num_classes}x{num_classes}, got {counts.shape}"
                )
            if (counts < 0).any():
                raise ValueError("counts must be nonnegative")
        self.counts = counts
        self.ignored_pixels = int(ignored_pixels)

    def copy(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.num_classes, self.counts.copy(),
                               self.ignored_pixels)

    def total_pixels(self) -> int:
        return int(self.counts.sum()) + self.ignored_pixels

    def update(self, pred, gt) -> "ConfusionMatrix":
        """In-place accumulation of one prediction/ground-truth pair."""
        pred = pred.data if isinstance(pred, LabelMap) else np.asarray(pred)
        gt = gt.data if isinstance(gt, LabelMap) else np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeError(f"prediction {pred.shape} vs ground truth {gt.shape}")
        k = self.num_classes
        gt = gt.astype(np.int64, copy=False).ravel()
        pred = pred.astype(np.int64, copy=False).ravel()
        valid = gt != IGNORE
        if bool((gt[valid] >= k).any()) or bool((gt < 0).any()):
            raise ClassOutOfRange(f"ground truth contains ids outside [0, {k})")
        if bool((pred[valid] >= k).any()) or bool((pred[valid] < 0).any()):
            raise ClassOutOfRange(f"prediction contains ids outside [0, {k})")
        flat = gt[valid] * k + pred[valid]
        self.counts += np.bincount(flat, minlength=k * k).reshape(k, k)
        self.ignored_pixels += int((~valid).sum())
        return self

    def __eq__(self, other):
        return (isinstance(other, ConfusionMatrix)
                and self.num_classes == other.num_classes
                and self.ignored_pixels == other.ignored_pixels
                and bool((self.counts == other.counts).all()))


def accumulate(cm: ConfusionMatrix, pred, gt) -> ConfusionMatrix:
    """Pure accumulation: returns an updated copy, leaving `cm` untouched."""
    return cm.copy().update(pred, gt)


def merge(a: ConfusionMatrix, b: ConfusionMatrix) -> ConfusionMatrix:
    """Elementwise sum of two matrices (associative and commutative)."""
    if a.num_classes != b.num_classes:
        raise KMismatch(f"cannot merge K={a.num_classes} with K={b.num_classes}")
    return ConfusionMatrix(a.num_classes, a.counts + b.counts,
                           a.ignored_pixels + b.ignored_pixels)


def per_class_iou(cm: ConfusionMatrix) -> np.ndarray:
    """Intersection-over-union per class; NaN where the class never occurs."""
    diag = np.diag(cm.counts).astype(np.float64)
    denom = (cm.counts.sum(axis=1) + cm.counts.sum(axis=0)).astype(np.float64) - diag
    with np.errstate(invalid="ignore", divide="ignore"):
        iou = np.where(denom > 0, diag / np.where(denom > 0, denom, 1.0), np.nan)
    return iou


def mean_iou(cm: ConfusionMatrix) -> float:
    """Mean IoU over defined classes only."""
    if cm.counts.sum() == 0:
        raise EmptyMatrix("confusion matrix has no counted pixels")
    return float(np.nanmean(per_class_iou(cm)))


def mean_acc(cm: ConfusionMatrix) -> float:
    """Mean per-class recall over classes that appear in the ground truth."""
    rows = cm.counts.sum(axis=1)
    if rows.sum() == 0:
        raise EmptyMatrix("confusion matrix has no counted pixels")
    defined = rows > 0
    recall = np.diag(cm.counts)[defined] / rows[defined].astype(np.float64)
    return float(recall.mean())


def global_pixel_acc(cm: ConfusionMatrix) -> float:
    """Fraction of all counted pixels that were predicted correctly."""
    total = cm.counts.sum()
    if total == 0:
        raise EmptyMatrix("confusion matrix has no counted pixels")
    return float(np.trace(cm.counts) / total)


def metrics_report(cm: ConfusionMatrix) -> dict:
    """JSON-ready summary; undefined per-class entries become null."""
    iou = per_class_iou(cm)
    return {
        "per_class_iou": [None if np.isnan(v) else float(v) for v in iou],
        "mean_iou": mean_iou(cm),
        "mean_acc": mean_acc(cm),
        "global_pixel_acc": global_pixel_acc(cm),
        "ignored_pixels": cm.ignored_pixels,
    }
