"""Binary container for arrays: magic ``XLG1``, little-endian header, row-major payload.

Layout: 4 magic bytes, u32 array count, then per array a u16 name length,
the UTF-8 name, a u8 dtype code, a u8 rank, u64 dims, and the raw
little-endian row-major payload. float64 is the canonical dtype; int64 and
bool (stored as u8) are supported for labels and masks.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"XLG1"

_DTYPE_CODES = {0: "<f8", 1: "<i8", 2: "u1"}
_CODE_FOR_KIND = {"f": 0, "i": 1, "b": 2}


class ContainerError(Exception):
    pass


def save_arrays(path, arrays: dict[str, np.ndarray]) -> None:
    """Write named arrays to ``path`` in XLG1 format."""
    chunks = [MAGIC, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        kind = arr.dtype.kind
        if kind == "u":
            kind = "i"
        if kind not in _CODE_FOR_KIND:
            raise ContainerError(f"unsupported dtype {arr.dtype} for array {name!r}")
        code = _CODE_FOR_KIND[kind]
        data = np.ascontiguousarray(arr.astype(_DTYPE_CODES[code], copy=False))
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<BB", code, data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}Q", *data.shape))
        chunks.append(data.tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_arrays(path) -> dict[str, np.ndarray]:
    """Read an XLG1 file back into a dict of arrays (bool arrays restored)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ContainerError(f"{path}: bad magic {blob[:4]!r}")
    (count,) = struct.unpack_from("<I", blob, 4)
    off = 8
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off : off + nlen].decode("utf-8")
        off += nlen
        code, ndim = struct.unpack_from("<BB", blob, off)
        off += 2
        if code not in _DTYPE_CODES:
            raise ContainerError(f"{path}: unknown dtype code {code}")
        shape = struct.unpack_from(f"<{ndim}Q", blob, off)
        off += 8 * ndim
        dtype = np.dtype(_DTYPE_CODES[code])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize if ndim else dtype.itemsize
        arr = np.frombuffer(blob[off : off + nbytes], dtype=dtype).reshape(shape).copy()
        off += nbytes
        if code == 2:
            arr = arr.astype(bool)
        out[name] = arr
    return out
