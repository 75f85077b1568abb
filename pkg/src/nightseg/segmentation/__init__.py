"""Semantic segmentation: network, focal loss, training, prediction."""

from .losses import focal_loss, focal_loss_tensor
from .networks import (
    DownsamplerBlock,
    Encoder,
    FactorizedBlock,
    PyramidPooling,
    SegmenterArch,
    SegmenterNet,
    build_segmenter,
    pyramid_pool,
)
from .predict import argmax_scores, predict, segmenter_forward
from .training import SegTrainConfig, SegTrainResult, train_segmenter
from .weights import SegmenterWeights, init_segmenter

__all__ = [
    "focal_loss",
    "focal_loss_tensor",
    "DownsamplerBlock",
    "Encoder",
    "FactorizedBlock",
    "PyramidPooling",
    "SegmenterArch",
    "SegmenterNet",
    "build_segmenter",
    "pyramid_pool",
    "argmax_scores",
    "predict",
    "segmenter_forward",
    "SegTrainConfig",
    "SegTrainResult",
    "train_segmenter",
    "SegmenterWeights",
    "init_segmenter",
]
