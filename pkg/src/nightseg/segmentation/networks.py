"""Encoder-decoder segmentation network.

The encoder stacks downsampler blocks (a strided convolution concatenated
with a max-pool of the same input) and factorized residual blocks whose
3x3 convolutions are split into 3x1/1x3 pairs, with dilation applied in
the deepest stage. The decoder pools the encoder output over a small
pyramid of grids, projects, and upsamples back to the input size. Total
downsampling is 8x; inputs that are not a multiple of 8 are handled by
internal padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import InvalidBinSize, ShapeError

DOWN_FACTOR = 8


@dataclass(frozen=True)
class SegmenterArch:
    """Hyperparameters that fix the segmenter's topology."""

    num_classes: int = 19
    widths: tuple = (16, 64, 128)
    mid_blocks: int = 5
    late_repeats: int = 2
    dilations: tuple = (1, 2, 4, 8)
    pool_bins: tuple = (1, 2, 4, 8)
    # channels per pooled branch after projection; 0 means widths[-1] // 4
    branch_channels: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.widths) != 3:
            raise ValueError(f"widths must have 3 entries, got {self.widths}")
        if not all(b > a for a, b in zip(self.widths, self.widths[1:])):
            raise ValueError(f"widths must be strictly increasing, got {self.widths}")
        if self.widths[0] <= 3:
            raise ValueError("first width must exceed the 3 input channels")
        for b in self.pool_bins:
            if int(b) < 1:
                raise InvalidBinSize(f"pool bin must be >= 1, got {b}")

    @property
    def resolved_branch_channels(self) -> int:
        return self.branch_channels or max(1, self.widths[-1] // 4)

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "widths": list(self.widths),
            "mid_blocks": self.mid_blocks,
            "late_repeats": self.late_repeats,
            "dilations": list(self.dilations),
            "pool_bins": list(self.pool_bins),
            "branch_channels": self.branch_channels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmenterArch":
        d = dict(d)
        for key in ("widths", "dilations", "pool_bins"):
            d[key] = tuple(d[key])
        return cls(**d)


class DownsamplerBlock(nn.Module):
    """Halves resolution: strided conv and max-pool outputs, concatenated."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        if out_channels <= in_channels:
            raise ValueError("downsampler needs out_channels > in_channels")
        self.conv = nn.Conv2d(in_channels, out_channels - in_channels,
                              kernel_size=3, stride=2, padding=1)
        self.pool = nn.MaxPool2d(2, stride=2)
        self.norm = nn.BatchNorm2d(out_channels)

    def forward(self, x):
        out = torch.cat([self.conv(x), self.pool(x)], dim=1)
        return F.relu(self.norm(out))


class FactorizedBlock(nn.Module):
    """Residual block of two 3x1/1x3 convolution pairs, second pair dilated."""

    def __init__(self, channels: int, dilation: int = 1):
        super().__init__()
        d = dilation
        self.conv3x1_1 = nn.Conv2d(channels, channels, (3, 1), padding=(1, 0))
        self.conv1x3_1 = nn.Conv2d(channels, channels, (1, 3), padding=(0, 1))
        self.norm1 = nn.BatchNorm2d(channels)
        self.conv3x1_2 = nn.Conv2d(channels, channels, (3, 1),
                                   padding=(d, 0), dilation=(d, 1))
        self.conv1x3_2 = nn.Conv2d(channels, channels, (1, 3),
                                   padding=(0, d), dilation=(1, d))
        self.norm2 = nn.BatchNorm2d(channels)

    def forward(self, x):
        out = F.relu(self.conv3x1_1(x))
        out = F.relu(self.norm1(self.conv1x3_1(out)))
        out = F.relu(self.conv3x1_2(out))
        out = self.norm2(self.conv1x3_2(out))
        return F.relu(out + x)


class Encoder(nn.Module):
    """Three downsampling stages with factorized blocks in between (8x total)."""

    def __init__(self, arch: SegmenterArch):
        super().__init__()
        w0, w1, w2 = arch.widths
        layers = [DownsamplerBlock(3, w0), DownsamplerBlock(w0, w1)]
        layers += [FactorizedBlock(w1) for _ in range(arch.mid_blocks)]
        layers.append(DownsamplerBlock(w1, w2))
        for _ in range(arch.late_repeats):
            layers += [FactorizedBlock(w2, d) for d in arch.dilations]
        self.stages = nn.Sequential(*layers)

    def forward(self, x):
        return self.stages(x)


def pyramid_pool(features: torch.Tensor, bin_sizes) -> torch.Tensor:
    """Concatenate `features` with each bin's average-pooled, re-upsampled map.

    Pure pooling: no learned projection, so each branch pixel is exactly the
    mean of its pooling region. Accepts (C, H, W) or (N, C, H, W).
    """
    squeeze = features.dim() == 3
    if squeeze:
        features = features.unsqueeze(0)
    if features.dim() != 4:
        raise ShapeError(f"expected 3d or 4d features, got {features.dim()}d")
    h, w = features.shape[2], features.shape[3]
    branches = [features]
    for b in bin_sizes:
        b = int(b)
        if b < 1 or b > min(h, w):
            raise InvalidBinSize(
                f"bin size {b} invalid for a {h}x{w} feature map"
            )
        pooled = F.adaptive_avg_pool2d(features, b)
        branches.append(F.interpolate(pooled, size=(h, w), mode="bilinear",
                                      align_corners=False))
    out = torch.cat(branches, dim=1)
    return out.squeeze(0) if squeeze else out


class PyramidPooling(nn.Module):
    """Learned pyramid head: per-bin pooling + 1x1 projection, then fusion."""

    def __init__(self, in_channels: int, bin_sizes, branch_channels: int):
        super().__init__()
        self.bin_sizes = tuple(int(b) for b in bin_sizes)
        self.projections = nn.ModuleList([
            nn.Sequential(
                nn.Conv2d(in_channels, branch_channels, 1, bias=False),
                nn.BatchNorm2d(branch_channels),
                nn.ReLU(inplace=True),
            )
            for _ in self.bin_sizes
        ])
        fused = in_channels + branch_channels * len(self.bin_sizes)
        self.fuse = nn.Sequential(
            nn.Conv2d(fused, in_channels, 1, bias=False),
            nn.BatchNorm2d(in_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        h, w = x.shape[2], x.shape[3]
        branches = [x]
        for b, proj in zip(self.bin_sizes, self.projections):
            if b > min(h, w):
                raise InvalidBinSize(
                    f"bin size {b} invalid for a {h}x{w} feature map"
                )
            pooled = proj(F.adaptive_avg_pool2d(x, b))
            branches.append(F.interpolate(pooled, size=(h, w),
                                          mode="bilinear", align_corners=False))
        return self.fuse(torch.cat(branches, dim=1))


class SegmenterNet(nn.Module):
    """Full segmenter: encoder, pyramid decoder, per-pixel class scores."""

    def __init__(self, arch: SegmenterArch):
        super().__init__()
        self.arch = arch
        self.encoder = Encoder(arch)
        self.decoder = PyramidPooling(arch.widths[-1], arch.pool_bins,
                                      arch.resolved_branch_channels)
        self.classifier = nn.Conv2d(arch.widths[-1], arch.num_classes, 1)

    def forward(self, x):
        if x.dim() != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected (N, 3, H, W) input, got {tuple(x.shape)}")
        h, w = x.shape[2], x.shape[3]
        min_side = DOWN_FACTOR * max(self.arch.pool_bins)
        pad_h = max(0, min_side - h, -h % DOWN_FACTOR)
        pad_w = max(0, min_side - w, -w % DOWN_FACTOR)
        # reflection can only mirror existing content: pad must stay < size
        if pad_h >= h or pad_w >= w:
            raise ShapeError(f"input {h}x{w} too small for this architecture")
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
        feats = self.encoder(x)
        feats = self.decoder(feats)
        scores = self.classifier(feats)
        scores = F.interpolate(scores, size=(x.shape[2], x.shape[3]),
                               mode="bilinear", align_corners=False)
        return scores[:, :, :h, :w]


def build_segmenter(arch: SegmenterArch) -> SegmenterNet:
    return SegmenterNet(arch)
