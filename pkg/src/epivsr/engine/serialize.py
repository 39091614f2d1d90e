"""Binary container for named tensors.

Layout: 8-byte magic ``LFVW0001``, an 8-byte little-endian unsigned length,
a UTF-8 JSON header ``{"entries": [{name, shape, dtype, offset}, ...]}``
where offsets are relative to the start of the payload region, then the raw
little-endian tensor payloads. Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"LFVW0001"

_DTYPE_TAGS = {"f32": "<f4", "f64": "<f8"}
_TAG_FOR_KIND = {np.dtype(np.float32): "f32", np.dtype(np.float64): "f64"}


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named float tensors to `path` in container format."""
    entries = []
    payloads = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype not in _TAG_FOR_KIND:
            raise ValueError(f"unsupported dtype {arr.dtype} for entry {name!r}")
        tag = _TAG_FOR_KIND[arr.dtype]
        raw = np.ascontiguousarray(arr, dtype=_DTYPE_TAGS[tag]).tobytes()
        entries.append(
            {"name": name, "shape": list(arr.shape), "dtype": tag, "offset": offset}
        )
        payloads.append(raw)
        offset += len(raw)
    header = json.dumps({"entries": entries}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in payloads:
            fh.write(raw)


def load_tensors(path) -> dict[str, np.ndarray]:
    """Read a container written by `save_tensors`."""
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: bad magic, not a tensor container")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16 : 16 + hlen].decode("utf-8"))
    base = 16 + hlen
    out: dict[str, np.ndarray] = {}
    for e in header["entries"]:
        shape = tuple(int(s) for s in e["shape"])
        dt = np.dtype(_DTYPE_TAGS[e["dtype"]])
        count = int(np.prod(shape)) if shape else 1
        start = base + int(e["offset"])
        arr = np.frombuffer(blob, dtype=dt, count=count, offset=start)
        out[e["name"]] = arr.reshape(shape).astype(dt.newbyteorder("="))
    return out
