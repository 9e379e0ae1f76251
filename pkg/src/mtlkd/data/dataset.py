"""Binary dataset files.

Layout (all little-endian)::

    magic       8 bytes  b"MTLKDDS1"
    version     u32
    variant     u32      4-bit constraint code (VariantSpec.code)
    n           u32      customers per instance
    count       u32
    seed        u64
    count records of:
        capacity, duration_limit, speed, scale   4 x f64
        coords      (n+1) x 2 f64
        demand      (n+1) i64
        service     (n+1) f64
        tw          (n+1) x 2 f64
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mtlkd.core.instance import Instance
from mtlkd.core.variant import VariantSpec

from .generate import generate_instances

MAGIC = b"MTLKDDS1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIIIQ")


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetHeader:
    variant: VariantSpec
    n: int
    count: int
    seed: int
    format_version: int = FORMAT_VERSION


@dataclass
class Dataset:
    header: DatasetHeader
    instances: list[Instance]

    def __len__(self) -> int:
        return len(self.instances)

    def __getitem__(self, i: int) -> Instance:
        return self.instances[i]


def generate_dataset(variant: VariantSpec, n: int, count: int, seed: int) -> Dataset:
    return Dataset(DatasetHeader(variant, n, count, seed), generate_instances(variant, n, count, seed))


def _record_size(n: int) -> int:
    return 8 * (4 + 2 * (n + 1) + (n + 1) + (n + 1) + 2 * (n + 1))


def dumps_dataset(ds: Dataset) -> bytes:
    h = ds.header
    if any(inst.n != h.n or inst.variant != h.variant for inst in ds.instances):
        raise ValueError("all instances must match the header variant and size")
    parts = [_HEADER.pack(MAGIC, h.format_version, h.variant.code, h.n, len(ds.instances), h.seed)]
    for inst in ds.instances:
        parts.append(struct.pack("<4d", inst.capacity, inst.duration_limit, inst.speed, inst.scale))
        parts.append(inst.coords.astype("<f8").tobytes())
        parts.append(inst.demand.astype("<i8").tobytes())
        parts.append(inst.service_time.astype("<f8").tobytes())
        parts.append(inst.tw.astype("<f8").tobytes())
    return b"".join(parts)


def loads_dataset(buf: bytes) -> Dataset:
    if len(buf) < _HEADER.size:
        raise DatasetFormatError("truncated dataset header")
    magic, version, code, n, count, seed = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported dataset version {version}")
    variant = VariantSpec.from_code(code)
    rec = _record_size(n)
    if len(buf) != _HEADER.size + count * rec:
        raise DatasetFormatError(
            f"expected {_HEADER.size + count * rec} bytes for {count} records, got {len(buf)}"
        )
    n1 = n + 1
    instances = []
    off = _HEADER.size
    for _ in range(count):
        capacity, limit, speed, scale = struct.unpack_from("<4d", buf, off)
        off += 32
        coords = np.frombuffer(buf, "<f8", 2 * n1, off).reshape(n1, 2)
        off += 16 * n1
        demand = np.frombuffer(buf, "<i8", n1, off)
        off += 8 * n1
        service = np.frombuffer(buf, "<f8", n1, off)
        off += 8 * n1
        tw = np.frombuffer(buf, "<f8", 2 * n1, off).reshape(n1, 2)
        off += 16 * n1
        instances.append(
            Instance(
                coords=coords,
                demand=demand,
                service_time=service,
                tw=tw,
                variant=variant,
                capacity=capacity,
                duration_limit=limit,
                speed=speed,
                scale=scale,
            )
        )
    return Dataset(DatasetHeader(variant, n, count, seed, version), instances)


def save_dataset(path, ds: Dataset) -> None:
    Path(path).write_bytes(dumps_dataset(ds))


def load_dataset(path) -> Dataset:
    return loads_dataset(Path(path).read_bytes())


def instance_to_json(inst: Instance) -> str:
    return json.dumps(inst.to_dict(), indent=1)


def instance_from_json(text: str) -> Instance:
    return Instance.from_dict(json.loads(text))
