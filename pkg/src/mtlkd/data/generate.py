"""Seeded random instance generation.

Every instance draws from its own Philox (counter-based) stream. Instance
``i`` of a dataset with seed ``s`` uses ``SeedSequence(s, spawn_key=(i,))``,
which is exactly what ``SeedSequence(s).spawn(count)[i]`` yields, so any
single instance can be regenerated without the others.

All fields are sampled in a fixed order whatever the variant, so two variants
generated from the same seed share coordinates and linehaul demands.
"""

from __future__ import annotations

import numpy as np

from mtlkd.core.instance import (
    DEFAULT_CAPACITY,
    DEFAULT_DURATION_LIMIT,
    DEFAULT_SERVICE_TIME,
    DEPOT_LATEST,
    Instance,
)
from mtlkd.core.variant import VariantSpec

BACKHAUL_FRACTION = 0.2
TW_WIDTH = (0.15, 0.75)
# customers farther than this from the depot cannot be served by an
# out-and-back route inside the depot window (2a + service <= 3)
MAX_DEPOT_DISTANCE = (DEPOT_LATEST - DEFAULT_SERVICE_TIME) / 2


def make_rng(seed, index: int | None = None) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif index is None:
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def _sample_coords(rng: np.random.Generator, n: int) -> np.ndarray:
    coords = rng.random((n + 1, 2))
    while True:
        far = np.flatnonzero(np.hypot(*(coords[1:] - coords[0]).T) > MAX_DEPOT_DISTANCE) + 1
        if far.size == 0:
            return coords
        coords[far] = rng.random((far.size, 2))


def generate_instance(variant: VariantSpec, n: int, seed, index: int | None = None) -> Instance:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed, index)
    coords = _sample_coords(rng, n)
    demand = rng.integers(1, 10, size=n)

    n_back = int(round(BACKHAUL_FRACTION * n))
    back_idx = rng.permutation(n)[:n_back]
    back_dem = rng.integers(1, 10, size=n_back)
    if variant.backhaul:
        demand[back_idx] = -back_dem

    # time windows: guarantee depot -> i -> depot fits inside [0, 3]
    a = np.hypot(*(coords[1:] - coords[0]).T)
    w = rng.uniform(*TW_WIDTH, size=n)
    u = rng.random(n)
    hi = np.maximum(a, DEPOT_LATEST - DEFAULT_SERVICE_TIME - a - w)
    start = a + u * (hi - a)
    late = np.minimum(start + w, DEPOT_LATEST - DEFAULT_SERVICE_TIME - a)
    start = np.maximum(start, a)

    if variant.time_window:
        tw = np.vstack([[0.0, DEPOT_LATEST], np.stack([start, late], axis=1)])
        service = np.concatenate([[0.0], np.full(n, DEFAULT_SERVICE_TIME)])
    else:
        tw = np.tile([0.0, np.inf], (n + 1, 1))
        service = np.zeros(n + 1)

    return Instance(
        coords=coords,
        demand=np.concatenate([[0], demand]),
        service_time=service,
        tw=tw,
        variant=variant,
        capacity=DEFAULT_CAPACITY,
        duration_limit=DEFAULT_DURATION_LIMIT,
    )


def generate_instances(variant: VariantSpec, n: int, count: int, seed) -> list[Instance]:
    return [generate_instance(variant, n, seed, index=i) for i in range(count)]
