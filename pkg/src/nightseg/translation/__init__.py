"""Unpaired day/night image translation: networks, training, inference."""

from .buffer import ImageBuffer
from .convert import generator_forward, translate_batch, translate_image
from .losses import adversarial_loss, cycle_consistency_loss
from .networks import (
    PatchDiscriminator,
    ResnetGenerator,
    TranslatorArch,
    build_discriminator,
    build_generator,
)
from .training import GanTrainConfig, GanTrainResult, train_translator
from .weights import TranslatorWeights, init_translator

__all__ = [
    "ImageBuffer",
    "generator_forward",
    "translate_batch",
    "translate_image",
    "adversarial_loss",
    "cycle_consistency_loss",
    "PatchDiscriminator",
    "ResnetGenerator",
    "TranslatorArch",
    "build_discriminator",
    "build_generator",
    "GanTrainConfig",
    "GanTrainResult",
    "train_translator",
    "TranslatorWeights",
    "init_translator",
]
