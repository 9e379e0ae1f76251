"""Named-tensor container: ``u32 count`` then per entry
``u16 name_len, name, u8 ndim, u32 dims..., f64 data`` (little-endian)."""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np


class TensorFormatError(ValueError):
    pass


def dumps_named(tensors) -> bytes:
    parts = [struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        key = name.encode()
        parts.append(struct.pack("<H", len(key)) + key)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads_named(buf: bytes, offset: int = 0) -> tuple["OrderedDict[str, np.ndarray]", int]:
    """Returns the tensors and the offset just past them."""
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    try:
        (count,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        for _ in range(count):
            (klen,) = struct.unpack_from("<H", buf, offset)
            offset += 2
            name = bytes(buf[offset : offset + klen]).decode()
            offset += klen
            (ndim,) = struct.unpack_from("<B", buf, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", buf, offset)
            offset += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            if offset + 8 * size > len(buf):
                raise TensorFormatError(f"truncated data for tensor {name!r}")
            out[name] = np.frombuffer(buf, "<f8", size, offset).reshape(shape).astype(np.float64)
            offset += 8 * size
    except struct.error as e:
        raise TensorFormatError(f"truncated tensor container: {e}") from e
    return out, offset
