"""Subtour-level operations on solutions: split, reorder, reverse, segment sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtlkd.core.solution import Solution
from mtlkd.core.variant import VariantSpec


def split_subtours(solution: Solution) -> list[tuple[int, ...]]:
    return list(solution.routes)


def rejoin(subtours) -> Solution:
    return Solution(subtours)


def reorder_subtours(solution: Solution, rng: np.random.Generator) -> Solution:
    """Uniformly random permutation of the routes; routes are untouched internally."""
    routes = split_subtours(solution)
    return rejoin([routes[i] for i in rng.permutation(len(routes))])


def reverse_subtours(solution: Solution, rng: np.random.Generator, variant: VariantSpec) -> Solution:
    """Flip each route with probability 1/2, only where reversal cannot change cost or feasibility.

    One coin is drawn per route whatever the variant, so the random stream
    does not depend on the variant.
    """
    routes = split_subtours(solution)
    flips = rng.random(len(routes)) < 0.5
    if not variant.reversal_safe:
        return solution
    return rejoin([r[::-1] if f else r for r, f in zip(routes, flips)])


@dataclass(frozen=True)
class Segment:
    """A run of whole subtours, possibly wrapping past the last subtour to the first."""

    start: int
    count: int
    customers: int

    def indices(self, total: int) -> list[int]:
        return [(self.start + k) % total for k in range(self.count)]


def draw_target(mode: str, k: int, lo: int, hi: int, rng: np.random.Generator) -> int:
    if mode == "fixed":
        return k
    return int(rng.integers(lo, max(lo, hi) + 1))


def accumulate_segment(subtours, target: int, rng: np.random.Generator, cap: int | None = None) -> Segment | None:
    """Random start subtour, then whole subtours until ``target`` customers are covered.

    With ``cap`` set, a subtour that would push the count above ``cap`` is not
    added; ``None`` is returned when even the first subtour exceeds it.
    """
    total = len(subtours)
    start = int(rng.integers(total))
    count = customers = 0
    while count < total and customers < target:
        size = len(subtours[(start + count) % total])
        if cap is not None and customers + size > cap:
            break
        customers += size
        count += 1
    if count == 0:
        return None
    return Segment(start, count, customers)
