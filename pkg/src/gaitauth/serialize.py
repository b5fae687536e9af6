"""Deterministic binary container for model state.

Zip-based formats stamp timestamps into the archive and pickles are not
stable across processes, so persisted models use a purpose-built layout that
is byte-identical for identical content:

    magic "GAUT1\\n"
    8-byte little-endian unsigned header length
    JSON header (sorted keys, no whitespace): {"meta": ..., "entries": [...]}
    raw array payloads, C-order, little-endian, in entry order

Entries are sorted by name, so insertion order never leaks into the file.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"GAUT1\n"

_DTYPES = {"f8": "<f8", "i8": "<i8"}


def _canonical(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array)
    if array.dtype.kind in ("i", "u", "b"):
        target = "<i8"
    elif array.dtype.kind == "f":
        target = "<f8"
    else:
        raise TypeError(f"unsupported array dtype {array.dtype}")
    # ascontiguousarray promotes 0-d to 1-d; reshape restores the true shape
    return np.ascontiguousarray(array, dtype=target).reshape(array.shape)


def save_blobs(path, meta: dict, arrays: dict) -> None:
    """Write scalars/strings (`meta`, anything JSON) plus named arrays."""
    entries = []
    payloads = []
    for name in sorted(arrays):
        arr = _canonical(arrays[name])
        code = "i8" if arr.dtype.kind == "i" else "f8"
        entries.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        payloads.append(arr.tobytes(order="C"))
    header = json.dumps({"meta": meta, "entries": entries},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in payloads:
            fh.write(blob)


def load_blobs(path):
    """Read a container back into (meta, {name: array})."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a gaitauth container")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["entries"]:
            dtype = np.dtype(_DTYPES[entry["dtype"]])
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = fh.read(count * dtype.itemsize)
            arrays[entry["name"]] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    return header["meta"], arrays
