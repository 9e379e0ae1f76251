"""Readers for CVRPLIB (TSPLIB-style) and Solomon benchmark files.

Coordinates are shifted to the origin and divided by the largest coordinate
span; ``Instance.scale`` keeps that span so objectives can be reported in the
file's native units. Solomon times are divided by the same span, which keeps
unit speed consistent.
"""

from __future__ import annotations

import re

import numpy as np

from mtlkd.core.instance import Instance
from mtlkd.core.variant import VariantSpec


class ParseError(ValueError):
    pass


_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def _rescale(xy: np.ndarray) -> tuple[np.ndarray, float]:
    lo = xy.min(axis=0)
    span = float((xy.max(axis=0) - lo).max())
    if span <= 0:
        raise ParseError("all coordinates coincide")
    return (xy - lo) / span, span


def parse_cvrplib(text: str) -> Instance:
    keys: dict[str, str] = {}
    sections: dict[str, list[list[str]]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split()[0].rstrip(":")
        if head.endswith("_SECTION"):
            current = head
            sections[current] = []
            continue
        m = re.match(r"^([A-Z_]+)\s*:\s*(.*)$", line)
        if m:
            keys[m.group(1)] = m.group(2).strip().strip('"')
            current = None
            continue
        if current is None:
            raise ParseError(f"unexpected line outside any section: {line!r}")
        sections[current].append(line.split())

    for k in ("DIMENSION", "CAPACITY"):
        if k not in keys:
            raise ParseError(f"missing mandatory field {k}")
    for s in _SECTIONS:
        if s not in sections:
            raise ParseError(f"missing mandatory section {s}")
    try:
        dim = int(keys["DIMENSION"])
        capacity = float(keys["CAPACITY"])
    except ValueError as e:
        raise ParseError(str(e)) from e

    coords: dict[int, tuple[float, float]] = {}
    for row in sections["NODE_COORD_SECTION"]:
        if len(row) != 3:
            raise ParseError(f"bad coordinate row {row}")
        coords[int(row[0])] = (float(row[1]), float(row[2]))
    demands: dict[int, int] = {}
    for row in sections["DEMAND_SECTION"]:
        if len(row) != 2:
            raise ParseError(f"bad demand row {row}")
        if not re.fullmatch(r"-?\d+", row[1]):
            raise ParseError(f"non-integer demand {row[1]!r} for node {row[0]}")
        demands[int(row[0])] = int(row[1])
    depots = [int(r[0]) for r in sections["DEPOT_SECTION"] if int(r[0]) != -1]
    if len(depots) != 1:
        raise ParseError(f"expected exactly one depot, got {depots}")
    depot = depots[0]
    ids = sorted(coords)
    if len(ids) != dim or sorted(demands) != ids:
        raise ParseError(f"DIMENSION {dim} does not match coordinate/demand sections")
    if demands[depot] != 0:
        raise ParseError(f"depot demand must be 0, got {demands[depot]}")
    order = [depot] + [i for i in ids if i != depot]

    xy, span = _rescale(np.array([coords[i] for i in order]))
    try:
        return Instance(
            coords=xy,
            demand=np.array([demands[i] for i in order]),
            service_time=np.zeros(dim),
            tw=np.tile([0.0, np.inf], (dim, 1)),
            variant=VariantSpec(),
            capacity=capacity,
            scale=span,
            name=keys.get("NAME", ""),
        )
    except ValueError as e:
        raise ParseError(str(e)) from e


def parse_solomon(text: str) -> Instance:
    lines = [ln.strip() for ln in text.splitlines()]
    name = next((ln for ln in lines if ln), "")
    try:
        vi = next(i for i, ln in enumerate(lines) if ln.upper().startswith("VEHICLE"))
        ci = next(i for i, ln in enumerate(lines) if ln.upper().startswith("CUSTOMER"))
    except StopIteration:
        raise ParseError("missing VEHICLE or CUSTOMER section") from None

    capacity = None
    for ln in lines[vi + 1 : ci]:
        parts = ln.split()
        if len(parts) == 2 and all(re.fullmatch(r"\d+(\.\d*)?", p) for p in parts):
            capacity = float(parts[1])
            break
    if capacity is None:
        raise ParseError("VEHICLE section has no NUMBER/CAPACITY row")

    rows = []
    for ln in lines[ci + 1 :]:
        parts = ln.split()
        if not parts or not re.fullmatch(r"-?\d+(\.\d*)?", parts[0]):
            continue  # column titles / blank lines
        if len(parts) != 7:
            raise ParseError(f"expected 7 columns, got {len(parts)}: {ln!r}")
        rows.append([float(p) for p in parts])
    if len(rows) < 2:
        raise ParseError("CUSTOMER section needs a depot and at least one customer")
    data = np.array(rows)
    if data[0, 0] != 0:
        raise ParseError("first CUSTOMER row must be the depot (number 0)")

    xy, span = _rescale(data[:, 1:3])
    try:
        return Instance(
            coords=xy,
            demand=data[:, 3].astype(np.int64),
            service_time=data[:, 6] / span,
            tw=data[:, 4:6] / span,
            variant=VariantSpec(time_window=True),
            capacity=capacity,
            scale=span,
            name=name,
        )
    except ValueError as e:
        raise ParseError(str(e)) from e
