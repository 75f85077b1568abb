"""Segmenter inference: score volumes and argmax label maps."""

from __future__ import annotations

import numpy as np
import torch

from ..errors import RangeTagMismatch, ShapeError
from ..imaging import ImageTensor, LabelMap
from ..tensorops import image_to_tensor
from .weights import SegmenterWeights


def segmenter_forward(weights: SegmenterWeights, img: ImageTensor) -> np.ndarray:
    """Raw per-pixel class scores, shape (H, W, K), for a unit-range image."""
    if img.range_tag != "unit":
        raise RangeTagMismatch(f"segmenter expects unit-range input, got {img.range_tag!r}")
    net = weights.build_net()
    with torch.no_grad():
        scores = net(image_to_tensor(img))
    return scores.squeeze(0).permute(1, 2, 0).numpy()


def argmax_scores(scores: np.ndarray, num_classes: int = 0) -> LabelMap:
    """Per-pixel argmax of an (H, W, K) score volume; ties go to the lowest index."""
    scores = np.asarray(scores)
    if scores.ndim != 3:
        raise ShapeError(f"expected (H, W, K) scores, got shape {scores.shape}")
    labels = np.argmax(scores, axis=2).astype(np.uint8)
    return LabelMap(labels, num_classes=num_classes or scores.shape[2])


def predict(weights: SegmenterWeights, img: ImageTensor) -> LabelMap:
    """Segment one image: forward pass followed by per-pixel argmax."""
    return argmax_scores(segmenter_forward(weights, img), weights.num_classes)
