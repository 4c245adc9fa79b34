"""Versioned binary container for named float32 arrays.

Layout: magic ``CHKV1``, a little-endian uint32 manifest length, the UTF-8
JSON manifest (kind, config, array names/shapes/offsets), then the raw
little-endian float32 array data. Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CHKV1"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Corrupt, truncated, or incompatible container."""


def save_container(
    path: str | Path,
    kind: str,
    config: dict,
    arrays: dict[str, np.ndarray],
) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    manifest = {
        "format": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "arrays": entries,
    }
    payload = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def load_container(path: str | Path, expect_kind: str | None = None):
    """Return (kind, config, arrays). Raises CheckpointError on any defect."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a {MAGIC.decode()} container (bad magic bytes)")
    pos = len(MAGIC)
    if len(raw) < pos + 4:
        raise CheckpointError(f"{path}: truncated before manifest length")
    (mlen,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if len(raw) < pos + mlen:
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[pos : pos + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable manifest: {exc}") from exc
    pos += mlen
    version = manifest.get("format")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: container format {version!r} unsupported (expected {FORMAT_VERSION})"
        )
    kind = manifest.get("kind")
    if expect_kind is not None and kind != expect_kind:
        raise CheckpointError(f"{path}: container kind {kind!r}, expected {expect_kind!r}")
    data = raw[pos:]
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
        start = entry["offset"]
        if start + nbytes > len(data):
            raise CheckpointError(
                f"{path}: array {entry['name']!r} of shape {shape} overruns file "
                f"(need {start + nbytes} data bytes, have {len(data)})"
            )
        arr = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=start)
        arrays[entry["name"]] = arr.reshape(shape).copy()
    return kind, manifest["config"], arrays
