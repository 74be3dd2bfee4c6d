"""Named-tensor binary container.

Layout: magic b"DNTC1", uint32 little-endian manifest length, manifest JSON
(format_version, config snapshot, tensor table of name/dtype/shape/offset),
then the concatenated little-endian raw tensor blob.  Roundtrips are exact
at the bit level.
"""

import json
import struct

import numpy as np

MAGIC = b"DNTC1"
FORMAT_VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8"}


class ContainerError(IOError):
    pass


def save_tensors(path, tensors: dict, config: dict | None = None):
    """Write name -> numpy array. dtypes limited to f32/f64/i64."""
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise ContainerError(f"unsupported dtype {dtype} for {name}")
        raw = np.ascontiguousarray(arr).astype(_DTYPES[dtype]).tobytes()
        entries.append({
            "name": name,
            "dtype": dtype,
            "shape": list(arr.shape),
            "byte_offset": offset,
            "byte_length": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config or {},
        "tensors": entries,
        "total_bytes": offset,
    }
    payload = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        for raw in blobs:
            f.write(raw)


def load_tensors(path):
    """Read a container; returns (tensors dict, config dict)."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ContainerError("bad magic bytes")
        (mlen,) = struct.unpack("<I", f.read(4))
        payload = f.read(mlen)
        if len(payload) != mlen:
            raise ContainerError("truncated manifest")
        manifest = json.loads(payload.decode("utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise ContainerError(
                f"unknown format_version {manifest.get('format_version')}")
        blob = f.read()
    if len(blob) != manifest["total_bytes"]:
        raise ContainerError("truncated tensor blob")
    seen = []
    tensors = {}
    for e in manifest["tensors"]:
        start, length = e["byte_offset"], e["byte_length"]
        for s, l in seen:
            if start < s + l and s < start + length:
                raise ContainerError("overlapping tensor offsets")
        seen.append((start, length))
        arr = np.frombuffer(blob[start:start + length], dtype=_DTYPES[e["dtype"]])
        tensors[e["name"]] = arr.reshape(e["shape"]).astype(e["dtype"])
    return tensors, manifest["config"]
