"""Conversions between the numpy image types and torch tensors."""

from __future__ import annotations

import numpy as np
import torch

from .imaging import ImageTensor, LabelMap


def image_to_tensor(img: ImageTensor) -> torch.Tensor:
    """(H, W, 3) float32 -> (1, 3, H, W) float32."""
    return torch.from_numpy(img.data).permute(2, 0, 1).unsqueeze(0).contiguous()


def tensor_to_image(t: torch.Tensor, range_tag: str) -> ImageTensor:
    """(1, 3, H, W) or (3, H, W) -> ImageTensor, clamped to the tag's range."""
    if t.dim() == 4:
        t = t.squeeze(0)
    lo, hi = (-1.0, 1.0) if range_tag == "signed" else (0.0, 1.0)
    arr = t.detach().clamp(lo, hi).permute(1, 2, 0).cpu().numpy()
    return ImageTensor(np.ascontiguousarray(arr, dtype=np.float32), range_tag)


def labels_to_tensor(lm: LabelMap) -> torch.Tensor:
    """(H, W) uint8 -> (1, H, W) int64."""
    return torch.from_numpy(lm.data.astype(np.int64)).unsqueeze(0)
