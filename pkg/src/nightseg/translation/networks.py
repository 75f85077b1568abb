"""Generator and discriminator networks for two-way image translation.

The generator is a residual encoder-decoder: a 7x7 stem, two stride-2
convolutions, a stack of residual blocks, two fractionally-strided
convolutions back up, and a tanh output so values stay in [-1, 1]. Inputs
whose sides are not divisible by 4 are padded reflectively inside forward()
and the output is cropped back, so odd working sizes pass through unchanged.

The discriminator is a patch-level classifier (stride-2 conv stack ending
in a 1-channel map of per-patch realness scores).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError


@dataclass(frozen=True)
class TranslatorArch:
    """Architecture hyperparameters shared by both generators."""

    in_channels: int = 3
    base_channels: int = 64
    n_res_blocks: int = 6
    disc_base_channels: int = 64
    disc_layers: int = 3
    image_size: tuple = (480, 270)  # (w, h) working resolution

    def to_dict(self) -> dict:
        d = asdict(self)
        d["image_size"] = list(self.image_size)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TranslatorArch":
        d = dict(d)
        d["image_size"] = tuple(d["image_size"])
        return cls(**d)


def init_weights_normal(module: nn.Module, std: float = 0.02) -> None:
    """Initialize conv weights from N(0, std), biases to zero."""
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, std)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.block(x)


class ResnetGenerator(nn.Module):
    """Image-to-image generator with a bounded (tanh) output."""

    # encoder/decoder use two stride-2 stages
    DOWN_FACTOR = 4
    MIN_SIDE = 8

    def __init__(self, arch: TranslatorArch):
        super().__init__()
        c = arch.base_channels
        layers = [
            nn.Conv2d(arch.in_channels, c, 7, padding=3, padding_mode="reflect"),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 3, stride=2, padding=1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1),
            nn.InstanceNorm2d(4 * c),
            nn.ReLU(inplace=True),
        ]
        layers += [ResidualBlock(4 * c) for _ in range(arch.n_res_blocks)]
        layers += [
            nn.ConvTranspose2d(4 * c, 2 * c, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, arch.in_channels, 7, padding=3, padding_mode="reflect"),
            nn.Tanh(),
        ]
        self.model = nn.Sequential(*layers)
        self.apply(init_weights_normal)

    def forward(self, x):
        h, w = x.shape[-2], x.shape[-1]
        if h < self.MIN_SIDE or w < self.MIN_SIDE:
            raise ShapeError(f"generator input {w}x{h} below minimum {self.MIN_SIDE}")
        pad_h = (-h) % self.DOWN_FACTOR
        pad_w = (-w) % self.DOWN_FACTOR
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
        out = self.model(x)
        return out[..., :h, :w]


class PatchDiscriminator(nn.Module):
    """Patch-level realness classifier; output is a score map, not a scalar."""

    def __init__(self, arch: TranslatorArch):
        super().__init__()
        c = arch.disc_base_channels
        self.min_side = 3 * 2 ** arch.disc_layers
        layers = [
            nn.Conv2d(arch.in_channels, c, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        prev = c
        for i in range(1, arch.disc_layers):
            ch = min(c * 2 ** i, c * 8)
            layers += [
                nn.Conv2d(prev, ch, 4, stride=2, padding=1),
                nn.InstanceNorm2d(ch),
                nn.LeakyReLU(0.2, inplace=True),
            ]
            prev = ch
        ch = min(c * 2 ** arch.disc_layers, c * 8)
        layers += [
            nn.Conv2d(prev, ch, 4, stride=1, padding=1),
            nn.InstanceNorm2d(ch),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(ch, 1, 4, stride=1, padding=1),
        ]
        self.model = nn.Sequential(*layers)
        self.apply(init_weights_normal)

    def forward(self, x):
        h, w = x.shape[-2], x.shape[-1]
        if h < self.min_side or w < self.min_side:
            raise ShapeError(
                f"discriminator input {w}x{h} below minimum {self.min_side}"
            )
        return self.model(x)


def build_generator(arch: TranslatorArch) -> ResnetGenerator:
    return ResnetGenerator(arch)


def build_discriminator(arch: TranslatorArch) -> PatchDiscriminator:
    return PatchDiscriminator(arch)
