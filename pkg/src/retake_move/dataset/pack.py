"""Binary sample packs ("MLDS") and their JSON manifests.

Header (little-endian): magic ``MLDS``, u16 version, u32 sample count,
u16 slot count, u16 token width, u16 horizon count.  Records follow back to
back: tokens f32[slots*width], labels i16[slots*horizons] (-1 = absent),
alive u8[slots], round index u32.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .curate import SampleSet

MAGIC = b"MLDS"
VERSION = 1
_HEADER = struct.Struct("<4sHIHHH")


class PackError(ValueError):
    """A sample pack that is truncated, mis-versioned or inconsistent."""


def record_dtype(slots, width, horizons):
    return np.dtype(
        [
            ("tokens", "<f4", (slots, width)),
            ("labels", "<i2", (slots, horizons)),
            ("alive", "u1", (slots,)),
            ("round", "<u4"),
        ]
    )


def write_pack(path, samples: SampleSet):
    n, slots, width = samples.tokens.shape
    horizons = samples.labels.shape[-1]
    rec = np.zeros(n, dtype=record_dtype(slots, width, horizons))
    rec["tokens"] = samples.tokens
    rec["labels"] = samples.labels
    rec["alive"] = samples.alive
    rec["round"] = samples.round_index
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, slots, width, horizons))
        fh.write(rec.tobytes())


def read_pack(path, round_ids=()):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise PackError(f"{path}: truncated header")
    magic, version, n, slots, width, horizons = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise PackError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise PackError(f"{path}: unsupported version {version}")
    dt = record_dtype(slots, width, horizons)
    if len(raw) != _HEADER.size + n * dt.itemsize:
        raise PackError(f"{path}: expected {n} records, size mismatch")
    rec = np.frombuffer(raw, dtype=dt, count=n, offset=_HEADER.size)
    return SampleSet(
        rec["tokens"].astype(np.float32),
        rec["labels"].astype(np.int16),
        rec["alive"].astype(bool),
        rec["round"].astype(np.uint32),
        list(round_ids),
    )


def write_manifest(path, samples: SampleSet, split, normalization, coverage=None, history_depth=0):
    doc = {
        "format": "MLDS",
        "version": VERSION,
        "samples": len(samples),
        "token_width": samples.width,
        "history_depth": history_depth,
        "round_ids": list(samples.round_ids),
        "split": {"train": list(split.train_rounds), "test": list(split.test_rounds)},
        "normalization": normalization,
    }
    if coverage is not None:
        doc["coverage"] = coverage.to_dict()
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return doc


def read_manifest(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PackError(f"{path}: manifest is not JSON: {exc}") from None


def load_dataset(pack_path, manifest_path):
    """Sample set with round ids restored from the manifest, plus the manifest itself."""
    manifest = read_manifest(manifest_path)
    samples = read_pack(pack_path, manifest["round_ids"])
    if samples.width != manifest["token_width"]:
        raise PackError("token width in manifest disagrees with the pack")
    return samples, manifest
