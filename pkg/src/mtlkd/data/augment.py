from __future__ import annotations

import numpy as np

from mtlkd.core.instance import Instance


def dihedral8(xy: np.ndarray) -> list[np.ndarray]:
    """The 8 symmetries of the unit square applied to an (N, 2) array; identity first."""
    x, y = xy[:, 0], xy[:, 1]
    pairs = [
        (x, y),
        (y, x),
        (1 - x, y),
        (y, 1 - x),
        (x, 1 - y),
        (1 - y, x),
        (1 - x, 1 - y),
        (1 - y, 1 - x),
    ]
    return [np.stack(p, axis=1) for p in pairs]


def augment8(instance: Instance) -> list[Instance]:
    return [instance.with_coords(c) for c in dihedral8(instance.coords)]
