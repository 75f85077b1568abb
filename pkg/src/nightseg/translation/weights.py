"""Versioned parameter container for the two-generator translator.

Both generators share one architecture description (they are built as
mutual inverses), and the two patch discriminators ride along so training
can be resumed or inspected. Serialization goes through the shared binary
container and round-trips bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..weights_io import FORMAT_VERSION, load_weights, save_weights
from .networks import (
    PatchDiscriminator,
    ResnetGenerator,
    TranslatorArch,
    build_discriminator,
    build_generator,
)

_PARTS = ("gen_day2night", "gen_night2day", "disc_day", "disc_night")

DIRECTIONS = ("day2night", "night2day")


def _state_to_numpy(module: torch.nn.Module) -> dict:
    return {k: v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


@dataclass
class TranslatorWeights:
    """Parameter sets of G (day -> night), F (night -> day) and both critics."""

    arch: TranslatorArch
    rng_seed: int
    gen_day2night: dict = field(repr=False, default_factory=dict)
    gen_night2day: dict = field(repr=False, default_factory=dict)
    disc_day: dict = field(repr=False, default_factory=dict)
    disc_night: dict = field(repr=False, default_factory=dict)
    version: int = FORMAT_VERSION

    def part(self, name: str) -> dict:
        return getattr(self, name)

    def save(self, path) -> None:
        tensors = {}
        for part in _PARTS:
            for key, arr in self.part(part).items():
                tensors[f"{part}/{key}"] = np.asarray(arr)
        save_weights(path, "translator", self.arch.to_dict(), self.rng_seed, tensors)

    @classmethod
    def load(cls, path) -> "TranslatorWeights":
        wf = load_weights(path)
        parts = {name: {} for name in _PARTS}
        for full_key, arr in wf.tensors.items():
            part, key = full_key.split("/", 1)
            parts[part][key] = arr
        return cls(
            arch=TranslatorArch.from_dict(wf.arch_config),
            rng_seed=wf.rng_seed,
            version=wf.version,
            **parts,
        )

    def build_generator(self, direction: str) -> ResnetGenerator:
        """Instantiate the generator for one direction in eval mode."""
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        gen = build_generator(self.arch)
        part = "gen_day2night" if direction == "day2night" else "gen_night2day"
        gen.load_state_dict({k: torch.from_numpy(v) for k, v in self.part(part).items()})
        gen.eval()
        return gen

    def build_discriminator(self, domain: str) -> PatchDiscriminator:
        if domain not in ("day", "night"):
            raise ValueError(f"domain must be 'day' or 'night', got {domain!r}")
        disc = build_discriminator(self.arch)
        part = "disc_day" if domain == "day" else "disc_night"
        disc.load_state_dict({k: torch.from_numpy(v) for k, v in self.part(part).items()})
        disc.eval()
        return disc


def init_translator(arch: TranslatorArch, seed: int) -> TranslatorWeights:
    """Freshly initialized translator weights, deterministic in the seed."""
    torch.manual_seed(seed)
    g = build_generator(arch)
    f = build_generator(arch)
    d_day = build_discriminator(arch)
    d_night = build_discriminator(arch)
    return TranslatorWeights(
        arch=arch,
        rng_seed=seed,
        gen_day2night=_state_to_numpy(g),
        gen_night2day=_state_to_numpy(f),
        disc_day=_state_to_numpy(d_day),
        disc_night=_state_to_numpy(d_night),
    )
