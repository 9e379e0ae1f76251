from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .variant import VariantSpec

DEFAULT_CAPACITY = 50.0
DEFAULT_DURATION_LIMIT = 3.0
DEFAULT_SERVICE_TIME = 0.2
DEPOT_LATEST = 3.0

# Absolute slack for every feasibility comparison (mask, verifier, exact solver).
EPS = 1e-9


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Instance:
    """A single VRP instance. Node 0 is the depot.

    ``demand`` is signed: backhaul customers carry negative values. When the
    variant has no time windows, ``tw`` holds ``[0, inf)`` everywhere and is
    ignored. ``scale`` converts unit-square objectives back to the native
    units of a parsed benchmark file.
    """

    coords: np.ndarray
    demand: np.ndarray
    service_time: np.ndarray
    tw: np.ndarray
    variant: VariantSpec
    capacity: float = DEFAULT_CAPACITY
    duration_limit: float = DEFAULT_DURATION_LIMIT
    speed: float = 1.0
    scale: float = 1.0
    name: str = ""
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        coords = _frozen(self.coords, np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 2:
            raise ValueError(f"coords must be (n+1, 2) with n >= 1, got {coords.shape}")
        n1 = coords.shape[0]
        demand = _frozen(self.demand, np.int64)
        service = _frozen(self.service_time, np.float64)
        tw = _frozen(self.tw, np.float64)
        if demand.shape != (n1,) or service.shape != (n1,) or tw.shape != (n1, 2):
            raise ValueError("per-node arrays must match the number of coordinates")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "service_time", service)
        object.__setattr__(self, "tw", tw)
        self._validate()
        diff = coords[:, None, :] - coords[None, :, :]
        object.__setattr__(self, "dist", _frozen(np.sqrt((diff**2).sum(-1)), np.float64))

    def _validate(self) -> None:
        if self.capacity <= 0 or self.speed <= 0 or self.duration_limit <= 0:
            raise ValueError("capacity, speed and duration limit must be positive")
        if self.demand[0] != 0:
            raise ValueError("depot demand must be 0")
        cust = self.demand[1:]
        if np.any(cust == 0):
            raise ValueError("customer demand must be non-zero")
        if not self.variant.backhaul and np.any(cust < 0):
            raise ValueError(f"negative demand in non-backhaul variant {self.variant}")
        if np.any(np.abs(cust) >= self.capacity):
            raise ValueError("every |demand| must be below capacity")
        if np.any(self.service_time < 0):
            raise ValueError("service times must be non-negative")
        if np.any(self.tw[:, 0] > self.tw[:, 1]):
            raise ValueError("time window earliest exceeds latest")
        if self.variant.time_window and np.any(self.tw[1:, 1] > self.tw[0, 1] + EPS):
            raise ValueError("customer latest time exceeds depot latest time")

    @property
    def n(self) -> int:
        """Number of customers."""
        return self.coords.shape[0] - 1

    def distance(self, i: int, j: int) -> float:
        n1 = self.coords.shape[0]
        if not (0 <= i < n1 and 0 <= j < n1):
            raise IndexError(f"node index out of range: ({i}, {j}) with {n1} nodes")
        return float(self.dist[i, j])

    def travel_time(self, i: int, j: int) -> float:
        return self.distance(i, j) / self.speed

    def sub_instance(self, customers) -> tuple["Instance", np.ndarray]:
        """Restrict to the depot plus ``customers``; returns the instance and the
        mapping from local node index to original node index."""
        nodes = np.concatenate([[0], np.asarray(customers, dtype=np.int64)])
        sub = Instance(
            coords=self.coords[nodes],
            demand=self.demand[nodes],
            service_time=self.service_time[nodes],
            tw=self.tw[nodes],
            variant=self.variant,
            capacity=self.capacity,
            duration_limit=self.duration_limit,
            speed=self.speed,
            scale=self.scale,
            name=self.name,
        )
        return sub, nodes

    def with_coords(self, coords) -> "Instance":
        return Instance(
            coords=coords,
            demand=self.demand,
            service_time=self.service_time,
            tw=self.tw,
            variant=self.variant,
            capacity=self.capacity,
            duration_limit=self.duration_limit,
            speed=self.speed,
            scale=self.scale,
            name=self.name,
        )

    def equals(self, other: "Instance") -> bool:
        return (
            self.variant == other.variant
            and self.capacity == other.capacity
            and self.duration_limit == other.duration_limit
            and self.speed == other.speed
            and self.scale == other.scale
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.service_time, other.service_time)
            and np.array_equal(self.tw, other.tw)
        )

    def to_dict(self) -> dict:
        def enc(x):
            return [None if math.isinf(v) else v for v in x]

        return {
            "name": self.name,
            "variant": self.variant.name,
            "capacity": self.capacity,
            "duration_limit": self.duration_limit,
            "speed": self.speed,
            "scale": self.scale,
            "coords": self.coords.tolist(),
            "demand": self.demand.tolist(),
            "service_time": self.service_time.tolist(),
            "tw": [enc(row) for row in self.tw.tolist()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        tw = [[math.inf if v is None else v for v in row] for row in d["tw"]]
        return cls(
            coords=d["coords"],
            demand=d["demand"],
            service_time=d["service_time"],
            tw=tw,
            variant=VariantSpec.from_name(d["variant"]),
            capacity=d["capacity"],
            duration_limit=d["duration_limit"],
            speed=d.get("speed", 1.0),
            scale=d.get("scale", 1.0),
            name=d.get("name", ""),
        )


def make_instance(coords, demand, variant: VariantSpec, *, tw=None, service_time=None, **kw) -> Instance:
    """Convenience constructor; inactive time-window fields default to inert values."""
    coords = np.asarray(coords, dtype=np.float64)
    n1 = len(coords)
    demand = np.concatenate([[0], np.asarray(demand, dtype=np.int64)]) if len(demand) == n1 - 1 else demand
    if tw is None:
        tw = np.tile([0.0, math.inf], (n1, 1))
    if service_time is None:
        service_time = np.zeros(n1)
    return Instance(coords=coords, demand=demand, service_time=service_time, tw=tw, variant=variant, **kw)
