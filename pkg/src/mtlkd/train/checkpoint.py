"""Checkpoint files.

Layout (little-endian)::

    b"MTLKDCK1" | u32 version | u32 header_len | header (UTF-8 JSON)
    | named tensors (see mtlkd.numkit.serialize) | u32 crc32 of all preceding bytes

The header holds the model kind ("teacher" or "student"), the task for
teachers, the training config, the epoch/batch cursor, the Adam step count
the rollout generator state and the losses of a partly finished epoch. Tensors are ``param.<name>``,
``adam.m.<i>`` and ``adam.v.<i>``.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from mtlkd.numkit.serialize import TensorFormatError, dumps_named, loads_named

MAGIC = b"MTLKDCK1"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    kind: str  # teacher | student
    task: str | None
    config: dict
    epoch: int
    batch: int
    rng_state: dict
    adam_t: int
    params: dict[str, np.ndarray]
    adam_m: list[np.ndarray] = field(default_factory=list)
    adam_v: list[np.ndarray] = field(default_factory=list)
    epoch_losses: list[float] = field(default_factory=list)  # losses of the unfinished epoch


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__u64__": [int(x) for x in obj.astype(np.uint64)]}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _from_json(obj):
    if isinstance(obj, dict):
        if set(obj) == {"__u64__"}:
            return np.array(obj["__u64__"], dtype=np.uint64)
        return {k: _from_json(v) for k, v in obj.items()}
    return obj


def dumps_checkpoint(ck: Checkpoint) -> bytes:
    header = json.dumps(
        {
            "kind": ck.kind,
            "task": ck.task,
            "config": ck.config,
            "epoch": ck.epoch,
            "batch": ck.batch,
            "rng_state": _jsonable(ck.rng_state),
            "adam_t": ck.adam_t,
            "n_moments": len(ck.adam_m),
            "epoch_losses": [float(x).hex() for x in ck.epoch_losses],
        },
        sort_keys=True,
    ).encode()
    tensors = {f"param.{k}": v for k, v in ck.params.items()}
    tensors.update({f"adam.m.{i}": a for i, a in enumerate(ck.adam_m)})
    tensors.update({f"adam.v.{i}": a for i, a in enumerate(ck.adam_v)})
    body = MAGIC + struct.pack("<II", VERSION, len(header)) + header + dumps_named(tensors)
    return body + struct.pack("<I", zlib.crc32(body))


def loads_checkpoint(buf: bytes) -> Checkpoint:
    if len(buf) < 20 or buf[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack_from("<II", buf, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    (crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    if zlib.crc32(buf[:-4]) != crc:
        raise CheckpointError("checkpoint is truncated or corrupted (checksum mismatch)")
    try:
        header = json.loads(buf[16 : 16 + hlen].decode())
        tensors, end = loads_named(buf, 16 + hlen)
    except (ValueError, TensorFormatError) as e:
        raise CheckpointError(f"corrupted checkpoint: {e}") from e
    if end != len(buf) - 4:
        raise CheckpointError("unexpected trailing bytes in checkpoint")
    k = header["n_moments"]
    return Checkpoint(
        kind=header["kind"],
        task=header["task"],
        config=header["config"],
        epoch=header["epoch"],
        batch=header["batch"],
        rng_state=_from_json(header["rng_state"]),
        adam_t=header["adam_t"],
        params={n[6:]: a for n, a in tensors.items() if n.startswith("param.")},
        adam_m=[tensors[f"adam.m.{i}"] for i in range(k)],
        adam_v=[tensors[f"adam.v.{i}"] for i in range(k)],
        epoch_losses=[float.fromhex(x) for x in header.get("epoch_losses", [])],
    )


def save_checkpoint(path, ck: Checkpoint) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_checkpoint(ck))


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return loads_checkpoint(fh.read())
