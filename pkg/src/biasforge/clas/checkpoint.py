"""Versioned checkpoint files.

Layout: magic line, then an 8-byte little-endian header length, a UTF-8 JSON
header (model config, dtype, tensor index) and the tensors as contiguous
little-endian float64 values in header order.
"""

from __future__ import annotations

import json
import struct

import numpy as np
import torch

from ..errors import DataFormatError
from .config import ModelConfig
from .model import CLASModel

MAGIC = b"BIASFORGE-CHECKPOINT\n"
VERSION = 1


def save_checkpoint(path, model: CLASModel, extra=None):
    tensors, offset = [], 0
    blobs = []
    for name, p in model.state_dict().items():
        arr = p.detach().numpy().astype("<f8")
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes(order="C"))
        offset += arr.size
    header = {
        "version": VERSION,
        "config": model.config.to_dict(),
        "dtype": str(model.dtype).replace("torch.", ""),
        "tensors": tensors,
        "extra": extra or {},
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for b in blobs:
            fh.write(b)


def load_checkpoint(path):
    """Return ``(model, extra)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(MAGIC):
        raise DataFormatError("not a checkpoint file (bad magic)", path)
    pos = len(MAGIC)
    try:
        (n,) = struct.unpack_from("<Q", data, pos)
        header = json.loads(data[pos + 8 : pos + 8 + n].decode("utf-8"))
    except (struct.error, ValueError) as exc:
        raise DataFormatError(f"corrupt checkpoint header: {exc}", path) from None
    if header.get("version") != VERSION:
        raise DataFormatError(f"unsupported checkpoint version {header.get('version')!r}", path)
    body = np.frombuffer(data, dtype="<f8", offset=pos + 8 + n)
    dtype = getattr(torch, header.get("dtype", "float64"))
    model = CLASModel(ModelConfig.from_dict(header["config"]), dtype=dtype)
    expected = model.state_dict()
    state = {}
    for t in header["tensors"]:
        name, shape, off = t["name"], tuple(t["shape"]), t["offset"]
        if name not in expected or tuple(expected[name].shape) != shape:
            raise DataFormatError(f"tensor {name!r} does not match the model config", path)
        size = int(np.prod(shape))
        if off + size > body.size:
            raise DataFormatError(f"tensor {name!r} is truncated", path)
        state[name] = torch.from_numpy(body[off : off + size].reshape(shape).copy()).to(dtype)
    missing = set(expected) - set(state)
    if missing:
        raise DataFormatError(f"missing tensors {sorted(missing)}", path)
    model.load_state_dict(state)
    return model, header.get("extra", {})
