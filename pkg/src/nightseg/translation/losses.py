"""Training objectives for the translator: cycle-consistency and
least-squares adversarial terms.

Both functions accept torch tensors and stay differentiable; they also
accept ImageTensor pairs for convenience (converted, no gradients).
"""

from __future__ import annotations

import torch

from ..errors import RangeTagMismatch, ShapeError
from ..imaging import ImageTensor


def _as_tensor_pair(a, b):
    if isinstance(a, ImageTensor) or isinstance(b, ImageTensor):
        if not (isinstance(a, ImageTensor) and isinstance(b, ImageTensor)):
            raise ShapeError("cannot mix ImageTensor and raw tensor operands")
        if a.range_tag != b.range_tag:
            raise RangeTagMismatch(
                f"range tags differ: {a.range_tag} vs {b.range_tag}"
            )
        return torch.from_numpy(a.data), torch.from_numpy(b.data)
    return torch.as_tensor(a), torch.as_tensor(b)


def cycle_consistency_loss(original, reconstructed) -> torch.Tensor:
    """Mean absolute difference (L1) over all elements.

    Nonnegative, symmetric, and zero exactly when the inputs are identical.
    """
    a, b = _as_tensor_pair(original, reconstructed)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    return (a - b).abs().mean()


def adversarial_loss(disc_outputs, target_is_real: bool) -> torch.Tensor:
    """Least-squares realness objective on discriminator score maps.

    mean((d - 1)^2) when the target is real, mean(d^2) when fake; a
    discriminator emitting the target constant scores exactly zero.
    """
    d = torch.as_tensor(disc_outputs)
    if d.numel() == 0:
        raise ShapeError("adversarial_loss received an empty score array")
    if not torch.is_floating_point(d):
        d = d.float()
    target = 1.0 if target_is_real else 0.0
    return ((d - target) ** 2).mean()
