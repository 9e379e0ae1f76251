"""The 16 capacitated VRP variants, identified by four optional constraint flags."""

from __future__ import annotations

import itertools
from dataclasses import dataclass


@dataclass(frozen=True)
class VariantSpec:
    """Which optional constraints are active. Capacity is always on."""

    open: bool = False
    backhaul: bool = False
    duration_limit: bool = False
    time_window: bool = False

    @property
    def name(self) -> str:
        if not any(self.flags):
            return "CVRP"
        return (
            ("O" if self.open else "")
            + "VRP"
            + ("B" if self.backhaul else "")
            + ("L" if self.duration_limit else "")
            + ("TW" if self.time_window else "")
        )

    @property
    def flags(self) -> tuple[bool, bool, bool, bool]:
        return (self.open, self.backhaul, self.duration_limit, self.time_window)

    @property
    def code(self) -> int:
        """4-bit integer encoding used by the binary dataset format."""
        return (
            int(self.open)
            | int(self.backhaul) << 1
            | int(self.duration_limit) << 2
            | int(self.time_window) << 3
        )

    @classmethod
    def from_code(cls, code: int) -> "VariantSpec":
        if not 0 <= code < 16:
            raise ValueError(f"variant code out of range: {code}")
        return cls(bool(code & 1), bool(code & 2), bool(code & 4), bool(code & 8))

    @classmethod
    def from_name(cls, name: str) -> "VariantSpec":
        key = name.strip().upper()
        if key == "CVRP":
            return cls()
        rest = key
        is_open = rest.startswith("O")
        if is_open:
            rest = rest[1:]
        if not rest.startswith("VRP"):
            raise ValueError(f"unknown variant name: {name!r}")
        rest = rest[3:]
        flags = {"B": False, "L": False, "TW": False}
        for token in ("B", "L", "TW"):
            if rest.startswith(token):
                flags[token] = True
                rest = rest[len(token):]
        if rest or (not is_open and not any(flags.values())):
            # plain "VRP" is not a canonical name; CVRP is
            raise ValueError(f"unknown variant name: {name!r}")
        return cls(is_open, flags["B"], flags["L"], flags["TW"])

    @property
    def reversal_safe(self) -> bool:
        """Route reversal preserves both cost and feasibility (closed, no time windows)."""
        return not self.open and not self.time_window

    def __str__(self) -> str:
        return self.name


ALL_VARIANTS: tuple[VariantSpec, ...] = tuple(
    VariantSpec(o, b, l, tw)
    for tw, l, b, o in itertools.product((False, True), repeat=4)
)

# Training tasks of the multi-task student; the remaining ten are zero-shot.
SEEN_VARIANTS: tuple[str, ...] = ("CVRP", "OVRP", "VRPB", "VRPL", "VRPTW", "OVRPTW")

CVRP = VariantSpec()
OVRP = VariantSpec(open=True)
VRPB = VariantSpec(backhaul=True)
VRPL = VariantSpec(duration_limit=True)
VRPTW = VariantSpec(time_window=True)
OVRPTW = VariantSpec(open=True, time_window=True)
