"""Checkpoint files ("MLMV").

Layout (little-endian): magic ``MLMV``, u16 version, u32 + JSON model config,
u32 tensor count, then per tensor: u16 + UTF-8 name, u8 dtype code, u8 ndim,
u32 dims, raw payload; finally u32 + JSON training metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..numerics.tensor import Tensor
from .config import ConfigError, ModelConfig
from .policy import MovePolicy, param_shapes

MAGIC = b"MLMV"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {v: k for k, v in _DTYPES.items()}


class CheckpointError(ValueError):
    """Unreadable, truncated or inconsistent checkpoint."""


def _blob(obj):
    data = json.dumps(obj, sort_keys=True).encode()
    return struct.pack("<I", len(data)) + data


def dumps(policy: MovePolicy, metadata=None):
    out = [MAGIC, struct.pack("<H", VERSION), _blob(policy.config.to_dict())]
    out.append(struct.pack("<I", len(policy.params)))
    for name, t in policy.params.items():
        arr = np.ascontiguousarray(t.data, dtype=t.data.dtype.newbyteorder("<"))
        nb = name.encode()
        out.append(struct.pack("<H", len(nb)) + nb)
        out.append(struct.pack("<BB", _CODES[np.dtype(arr.dtype.str)], arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(arr.tobytes())
    out.append(_blob(metadata or {}))
    return b"".join(out)


def save(path, policy, metadata=None):
    path = Path(path)
    data = dumps(policy, metadata)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


class _Reader:
    def __init__(self, raw):
        self.raw = raw
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.raw):
            raise CheckpointError("checkpoint is truncated")
        chunk = self.raw[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def json(self):
        (n,) = self.unpack("<I")
        try:
            return json.loads(self.take(n))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"corrupt JSON block: {exc}") from None


def loads(raw):
    """Parse a checkpoint; returns (MovePolicy, metadata).  Nothing is built on error."""
    r = _Reader(raw)
    if r.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        config = ModelConfig.from_dict(r.json())
    except (ConfigError, TypeError) as exc:
        raise CheckpointError(f"bad model config: {exc}") from None
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode()
        code, ndim = r.unpack("<BB")
        if code not in _DTYPES:
            raise CheckpointError(f"tensor {name}: unknown dtype code {code}")
        dims = r.unpack(f"<{ndim}I")
        dt = _DTYPES[code]
        n = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(r.take(n * dt.itemsize), dtype=dt).reshape(dims)
        tensors[name] = arr
    metadata = r.json()
    if r.pos != len(raw):
        raise CheckpointError("trailing bytes after checkpoint")
    expected = param_shapes(config)
    if set(expected) != set(tensors):
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        raise CheckpointError(f"tensor table does not match config (missing {missing}, unexpected {extra})")
    params = {}
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise CheckpointError(f"tensor {name}: shape {tensors[name].shape} but config implies {shape}")
        params[name] = Tensor(tensors[name].astype(np.float32), requires_grad=True, dtype=np.float32)
    return MovePolicy(config, params), metadata


def load(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from None
    return loads(raw)
