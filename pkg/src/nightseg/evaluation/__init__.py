"""Segmentation metrics and the synthetic-ratio sweep harness."""

from .metrics import (
    ConfusionMatrix,
    accumulate,
    global_pixel_acc,
    mean_acc,
    mean_iou,
    merge,
    metrics_report,
    per_class_iou,
)
from .sweep import SweepResult, evaluate_manifest, run_sweep

__all__ = [
    "ConfusionMatrix",
    "accumulate",
    "global_pixel_acc",
    "mean_acc",
    "mean_iou",
    "merge",
    "metrics_report",
    "per_class_iou",
    "SweepResult",
    "evaluate_manifest",
    "run_sweep",
]
