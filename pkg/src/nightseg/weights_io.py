"""Binary container for model parameters.

Layout: an 8-byte magic, an 8-byte little-endian header length, a JSON
header, then the raw little-endian bytes of every tensor back to back.
The header records the container version, the model kind, its architecture
configuration, the RNG seed the weights were trained from, and an index of
tensor names/dtypes/shapes/offsets. Loading reproduces every tensor
bit-exactly; unknown container versions are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError, MissingFile, UnsupportedWeightsVersion

MAGIC = b"NSWEIGHT"
FORMAT_VERSION = 1


@dataclass
class WeightsFile:
    """Decoded contents of a weights container."""

    model_kind: str
    arch_config: dict
    rng_seed: int
    tensors: dict  # name -> np.ndarray
    version: int = FORMAT_VERSION


def save_weights(path, model_kind: str, arch_config: dict, rng_seed: int,
                 tensors: dict) -> None:
    """Serialize named arrays with their metadata header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    index = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        # not ascontiguousarray: that would silently promote 0-d arrays to (1,)
        arr = np.asarray(arr, order="C")
        raw = arr.tobytes()
        index.append({
            "name": name,
            "dtype": arr.dtype.name,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "model_kind": model_kind,
        "arch_config": arch_config,
        "rng_seed": int(rng_seed),
        "tensors": index,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header_bytes).to_bytes(8, "little"))
        fh.write(header_bytes)
        for raw in blobs:
            fh.write(raw)


def load_weights(path) -> WeightsFile:
    """Read a container back; bit-exact inverse of save_weights."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise DecodeError(f"{path}: not a weights container")
        header_len = int.from_bytes(fh.read(8), "little")
        try:
            header = json.loads(fh.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DecodeError(f"{path}: corrupt header ({exc})") from exc
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise UnsupportedWeightsVersion(
                f"{path}: container version {version!r}, expected {FORMAT_VERSION}"
            )
        blob = fh.read()
    tensors = {}
    for entry in header["tensors"]:
        raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return WeightsFile(
        model_kind=header["model_kind"],
        arch_config=header["arch_config"],
        rng_seed=header["rng_seed"],
        tensors=tensors,
        version=version,
    )


def weights_digest(path) -> str:
    """sha256 of the container bytes; used for determinism checks."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
