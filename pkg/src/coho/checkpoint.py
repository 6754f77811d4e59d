"""Versioned single-file model container.

Layout: magic, manifest length (u32 LE), manifest JSON (format_version,
model_kind, hyperparameters, tensor table name -> {shape, offset}), then a
little-endian float32 payload.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from . import autodiff as ad
from .errors import CompatibilityError, ParseError

MAGIC = b"COHO\x01"
CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(path, model_kind: str, hyperparameters: dict,
                    params: dict, extras: dict | None = None):
    """Write named tensors (autodiff Tensors or arrays) plus metadata."""
    table = {}
    payload = bytearray()
    for name in sorted(params):
        arr = params[name]
        data = (arr.data if isinstance(arr, ad.Tensor) else np.asarray(arr))
        data = np.ascontiguousarray(data, dtype="<f4")
        table[name] = {"shape": list(data.shape), "offset": len(payload)}
        payload += data.tobytes()
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_kind": model_kind,
        "hyperparameters": hyperparameters,
        "extras": extras or {},
        "tensors": table,
    }
    mbytes = json.dumps(manifest, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(mbytes)))
        f.write(mbytes)
        f.write(bytes(payload))


def load_checkpoint(path, expect_kind: str | None = None):
    """Returns (manifest, params dict of float32 Tensors with grads on)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:len(MAGIC)] != MAGIC:
        raise ParseError(f"{path}: not a checkpoint file")
    (mlen,) = struct.unpack("<I", raw[len(MAGIC):len(MAGIC) + 4])
    start = len(MAGIC) + 4
    manifest = json.loads(raw[start:start + mlen])
    if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version")
    if expect_kind and manifest["model_kind"] != expect_kind:
        raise CompatibilityError(
            f"{path}: expected model_kind={expect_kind}, "
            f"found {manifest['model_kind']}")
    payload = raw[start + mlen:]
    params = {}
    for name, entry in manifest["tensors"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(payload, dtype="<f4", count=count,
                            offset=entry["offset"]).reshape(shape)
        params[name] = ad.Tensor(arr.copy(), requires_grad=True)
    return manifest, params


def file_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
