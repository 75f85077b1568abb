"""Deterministic fan-out of one global seed into per-stage seeds.

Every pipeline stage (GAN training, segmenter training, mix planning, ...)
draws its own seed as a hash of the global seed and a stage name, so stages
stay statistically independent while the whole experiment is reproducible
from a single integer.
"""

import hashlib


def derive_seed(global_seed: int, stage: str) -> int:
    """Return a 32-bit seed unique to (global_seed, stage).

    The derivation is sha256 over the decimal seed and the stage name,
    truncated to 4 bytes; it is stable across processes and platforms.
    """
    digest = hashlib.sha256(f"{global_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
