"""Versioned parameter container for the segmenter.

Same binary framing as the translator weights; the payload is the full
state dict of the network (encoder + pyramid decoder + classifier head),
keyed by the module path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..weights_io import FORMAT_VERSION, load_weights, save_weights
from .networks import SegmenterArch, SegmenterNet, build_segmenter


def _state_to_numpy(module: torch.nn.Module) -> dict:
    return {k: v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


@dataclass
class SegmenterWeights:
    arch: SegmenterArch
    rng_seed: int
    state: dict = field(repr=False, default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def num_classes(self) -> int:
        return self.arch.num_classes

    def save(self, path) -> None:
        tensors = {k: np.asarray(v) for k, v in self.state.items()}
        save_weights(path, "segmenter", self.arch.to_dict(), self.rng_seed, tensors)

    @classmethod
    def load(cls, path) -> "SegmenterWeights":
        wf = load_weights(path)
        return cls(
            arch=SegmenterArch.from_dict(wf.arch_config),
            rng_seed=wf.rng_seed,
            state=dict(wf.tensors),
            version=wf.version,
        )

    def build_net(self) -> SegmenterNet:
        """Instantiate the network with these parameters, in eval mode."""
        net = build_segmenter(self.arch)
        net.load_state_dict({k: torch.from_numpy(np.asarray(v))
                             for k, v in self.state.items()})
        net.eval()
        return net

    @classmethod
    def from_net(cls, net: SegmenterNet, seed: int) -> "SegmenterWeights":
        return cls(arch=net.arch, rng_seed=seed, state=_state_to_numpy(net))


def init_segmenter(arch: SegmenterArch, seed: int) -> SegmenterWeights:
    """Freshly initialized segmenter weights, deterministic in the seed."""
    torch.manual_seed(seed)
    return SegmenterWeights.from_net(build_segmenter(arch), seed)
