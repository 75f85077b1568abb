"""Focal loss for dense per-pixel classification.

The loss is the mean over non-ignored pixels of ``-w_c * (1 - p_t)^gamma *
log(p_t)`` where ``p_t`` is the softmax probability of the true class. With
``gamma == 0`` and no class weights this is exactly cross-entropy. Pixels
labelled IGNORE contribute nothing; a batch consisting only of ignored
pixels yields 0 and an AllIgnoredWarning rather than an error.
"""

from __future__ import annotations

import warnings

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import AllIgnoredWarning, InvalidClassValue, ShapeError
from ..imaging import IGNORE, LabelMap


def focal_loss_tensor(logits: torch.Tensor, target: torch.Tensor,
                      gamma: float = 2.0, class_weights=None) -> torch.Tensor:
    """Differentiable focal loss on (N, K, H, W) logits and (N, H, W) targets."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if logits.dim() != 4 or target.dim() != 3:
        raise ShapeError(
            f"expected (N, K, H, W) scores and (N, H, W) target, got "
            f"{tuple(logits.shape)} and {tuple(target.shape)}"
        )
    if logits.shape[0] != target.shape[0] or logits.shape[2:] != target.shape[1:]:
        raise ShapeError(
            f"scores {tuple(logits.shape)} do not cover target {tuple(target.shape)}"
        )
    k = logits.shape[1]
    if class_weights is not None:
        class_weights = torch.as_tensor(class_weights, dtype=logits.dtype)
        if class_weights.shape != (k,):
            raise ShapeError(
                f"class_weights must have shape ({k},), got {tuple(class_weights.shape)}"
            )
        if bool((class_weights <= 0).any()):
            raise ValueError("class weights must all be positive")

    valid = target != IGNORE
    if bool((valid & ((target < 0) | (target >= k))).any()):
        raise InvalidClassValue(
            f"target contains class ids outside [0, {k}) that are not IGNORE"
        )
    n_valid = int(valid.sum())
    if n_valid == 0:
        warnings.warn("focal loss: every pixel is ignored", AllIgnoredWarning)
        return logits.sum() * 0.0

    log_probs = F.log_softmax(logits, dim=1)
    safe_target = torch.where(valid, target, torch.zeros_like(target))
    log_pt = log_probs.gather(1, safe_target.unsqueeze(1)).squeeze(1)
    term = -((1.0 - log_pt.exp()) ** gamma) * log_pt
    if class_weights is not None:
        term = term * class_weights[safe_target]
    return term[valid].sum() / n_valid


def focal_loss(scores, target, gamma: float = 2.0, class_weights=None) -> float:
    """Focal loss on an (H, W, K) score volume against a label map."""
    if isinstance(target, LabelMap):
        target = target.data
    scores = np.asarray(scores)
    target = np.asarray(target)
    if scores.ndim != 3 or target.ndim != 2 or scores.shape[:2] != target.shape:
        raise ShapeError(
            f"expected (H, W, K) scores matching (H, W) target, got "
            f"{scores.shape} and {target.shape}"
        )
    logits = torch.from_numpy(np.ascontiguousarray(scores)).permute(2, 0, 1)
    labels = torch.from_numpy(target.astype(np.int64))
    value = focal_loss_tensor(logits.unsqueeze(0), labels.unsqueeze(0),
                              gamma=gamma, class_weights=class_weights)
    return float(value)
