"""History buffer of generated images used to train the discriminators.

Feeding the discriminator a mix of fresh and older generated images damps
oscillation between the two players. Until the buffer is full every image
is stored and returned as-is; after that each incoming image either passes
straight through (probability 0.5) or is swapped with a uniformly chosen
stored image, which is returned instead.
"""

from __future__ import annotations

import random

import torch


class ImageBuffer:
    def __init__(self, max_size: int = 50, seed: int = 0):
        if max_size < 0:
            raise ValueError(f"buffer size must be >= 0, got {max_size}")
        self.max_size = max_size
        self._items: list[torch.Tensor] = []
        self._rng = random.Random(seed)

    def __len__(self) -> int:
        return len(self._items)

    def push_and_sample(self, batch: torch.Tensor) -> torch.Tensor:
        """Insert a detached batch, returning same-shaped images to score."""
        batch = batch.detach()
        if self.max_size == 0:
            return batch
        out = []
        for img in batch:
            if len(self._items) < self.max_size:
                self._items.append(img.clone())
                out.append(img)
            elif self._rng.random() < 0.5:
                idx = self._rng.randrange(self.max_size)
                out.append(self._items[idx].clone())
                self._items[idx] = img.clone()
            else:
                out.append(img)
        return torch.stack(out)
