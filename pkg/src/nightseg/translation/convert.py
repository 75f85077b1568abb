"""Inference-side use of the translator: single images and batches of files."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import torch

from ..errors import DecodeError, RangeTagMismatch
from ..imaging import ImageTensor, load_image, resize_image, save_image, to_signed, to_unit
from ..tensorops import image_to_tensor, tensor_to_image
from .networks import ResnetGenerator
from .weights import DIRECTIONS, TranslatorWeights

log = logging.getLogger(__name__)


def generator_forward(weights: TranslatorWeights, img: ImageTensor,
                      direction: str = "day2night") -> ImageTensor:
    """Run one signed-range image through one generator.

    Output has the same spatial shape as the input and stays in [-1, 1].
    """
    if img.range_tag != "signed":
        raise RangeTagMismatch("generator input must be signed-range")
    gen = weights.build_generator(direction)
    with torch.no_grad():
        out = gen(image_to_tensor(img))
    return tensor_to_image(out, "signed")


def translate_image(gen: ResnetGenerator, img: ImageTensor,
                    target_size: tuple) -> ImageTensor:
    """Resize a unit-range image to the working size and translate it."""
    resized = resize_image(img, target_size[0], target_size[1])
    with torch.no_grad():
        out = gen(image_to_tensor(to_signed(resized)))
    return to_unit(tensor_to_image(out, "signed"))


def translate_batch(weights: TranslatorWeights, direction: str, inputs,
                    out_dir) -> list:
    """Convert a list of image files, writing one PNG per input.

    Unreadable inputs are skipped and listed in a sidecar report
    (convert_report.json) next to the outputs. Returns the written paths
    in input order. With no inputs, nothing is written at all.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    inputs = [Path(p) for p in inputs]
    out_dir = Path(out_dir)
    if not inputs:
        return []
    out_dir.mkdir(parents=True, exist_ok=True)
    gen = weights.build_generator(direction)
    written = []
    skipped = []
    for path in inputs:
        if not path.exists():
            log.warning("skipping missing input %s", path)
            skipped.append({"input": str(path), "reason": "missing file"})
            continue
        try:
            img = load_image(path)
        except DecodeError as exc:
            log.warning("skipping undecodable input %s (%s)", path, exc)
            skipped.append({"input": str(path), "reason": str(exc)})
            continue
        out = translate_image(gen, img, weights.arch.image_size)
        out_path = out_dir / f"{path.stem}_{direction}.png"
        save_image(out, out_path)
        written.append(out_path)
    report = {
        "direction": direction,
        "written": [str(p) for p in written],
        "skipped": skipped,
    }
    with open(out_dir / "convert_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return written
