"""Procedural two-domain toy corpus: colored geometric street scenes.

Each scene is a 64x64 label map (ground, building, vehicle, sign, sky)
rendered twice from the same geometry: a bright "day" palette and a dark,
blue-shifted, low-contrast "night" palette. The night palette is a global
affine map of the day palette, so a pointwise color transform is a perfect
translator between the domains and the renderer itself provides paired
ground truth. Written with numpy + PIL only, independent of the package
under test.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

SIZE = 64
NUM_CLASSES = 5
GROUND, BUILDING, VEHICLE, SIGN, SKY = range(NUM_CLASSES)

DAY_PALETTE = np.array([
    [0.45, 0.42, 0.40],   # ground: asphalt gray
    [0.72, 0.52, 0.35],   # building: warm brick
    [0.85, 0.15, 0.12],   # vehicle: red
    [0.95, 0.80, 0.10],   # sign: yellow
    [0.55, 0.75, 0.95],   # sky: light blue
], dtype=np.float64)

NIGHT_GAIN = 0.16
NIGHT_BIAS = np.array([0.03, 0.04, 0.10], dtype=np.float64)

DAY_NOISE = 0.020
NIGHT_NOISE = 0.012
SCENE_JITTER = 0.03


def night_palette() -> np.ndarray:
    return NIGHT_GAIN * DAY_PALETTE + NIGHT_BIAS


def day_to_night_pixels(img: np.ndarray) -> np.ndarray:
    """The ground-truth pointwise translator (works on any unit-range array)."""
    return np.clip(NIGHT_GAIN * img + NIGHT_BIAS, 0.0, 1.0)


def make_labels(rng: np.random.Generator, size: int = SIZE) -> np.ndarray:
    """One random scene layout as a label map."""
    lab = np.full((size, size), GROUND, dtype=np.uint8)
    horizon = int(rng.integers(size * 5 // 16, size // 2))
    lab[:horizon] = SKY

    for _ in range(int(rng.integers(1, 4))):
        w = int(rng.integers(size // 8, size // 4))
        h = int(rng.integers(size // 6, size // 3))
        x0 = int(rng.integers(0, size - w))
        lab[max(0, horizon - h):horizon, x0:x0 + w] = BUILDING

    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(0, 3))):
        r = int(rng.integers(size // 16, size // 8))
        cy = int(rng.integers(horizon + r + 1, size - r))
        cx = int(rng.integers(r, size - r))
        lab[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = VEHICLE

    if rng.random() < 0.7:
        half = int(rng.integers(3, 6))
        apex_y = int(rng.integers(horizon - 8, horizon - 2))
        apex_x = int(rng.integers(half + 1, size - half - 1))
        for dy in range(2 * half):
            row = apex_y + dy
            if 0 <= row < size:
                spread = dy // 2
                lab[row, max(0, apex_x - spread):min(size, apex_x + spread + 1)] = SIGN
    return lab


def render(labels: np.ndarray, domain: str,
           rng: np.random.Generator) -> np.ndarray:
    """Colorize a label map in one domain; returns float64 (H, W, 3) in [0,1]."""
    if domain == "day":
        palette, noise = DAY_PALETTE, DAY_NOISE
    elif domain == "night":
        palette, noise = night_palette(), NIGHT_NOISE
    else:
        raise ValueError(f"unknown domain {domain!r}")
    img = palette[labels]
    img = img * (1.0 + rng.normal(0.0, SCENE_JITTER))
    img = img + rng.normal(0.0, noise, img.shape)
    return np.clip(img, 0.0, 1.0)


def _save_image(img: np.ndarray, path: Path) -> None:
    Image.fromarray(np.rint(img * 255.0).astype(np.uint8), mode="RGB").save(path)


def _save_labels(lab: np.ndarray, path: Path) -> None:
    Image.fromarray(lab, mode="L").save(path)


def write_split(root: Path, name: str, count: int, domain: str,
                rng: np.random.Generator, with_labels: bool = True) -> Path:
    """Write one split as images/ (+ labels/) under root/name; returns its dir."""
    split = Path(root) / name
    images = split / "images"
    images.mkdir(parents=True, exist_ok=True)
    labels_dir = split / "labels"
    if with_labels:
        labels_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        lab = make_labels(rng)
        img = render(lab, domain, rng)
        _save_image(img, images / f"scene_{i:04d}.png")
        if with_labels:
            _save_labels(lab, labels_dir / f"scene_{i:04d}.png")
    return split


def write_corpus(root, seed: int = 7, n_train: int = 200, n_gan_night: int = 120,
                 n_eval: int = 25) -> dict:
    """Build every split the experiments need; returns their directories."""
    root = Path(root)
    rng = np.random.default_rng(seed)
    return {
        "train_day": write_split(root, "train_day", n_train, "day", rng),
        "gan_night": write_split(root, "gan_night", n_gan_night, "night", rng,
                                 with_labels=False),
        "eval_day": write_split(root, "eval_day", n_eval, "day", rng),
        "eval_night": write_split(root, "eval_night", n_eval, "night", rng),
    }
