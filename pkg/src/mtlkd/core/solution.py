"""Solutions, objective evaluation and an independent feasibility verifier.

The verifier re-simulates each route from scratch and shares no code with the
decoding mask, so the two can be checked against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .instance import EPS, Instance


class StructureError(ValueError):
    """A solution is not a partition of the customers into non-empty routes."""


@dataclass(frozen=True)
class Solution:
    routes: tuple[tuple[int, ...], ...]

    def __init__(self, routes) -> None:
        object.__setattr__(self, "routes", tuple(tuple(int(c) for c in r) for r in routes))

    @property
    def customers(self) -> list[int]:
        return [c for r in self.routes for c in r]

    def giant_tour(self) -> list[int]:
        tour = [0]
        for r in self.routes:
            tour.extend(r)
            tour.append(0)
        return tour

    def to_text(self) -> str:
        return " ".join(str(v) for v in self.giant_tour())

    @classmethod
    def from_giant_tour(cls, tour) -> "Solution":
        routes, cur = [], []
        for v in tour:
            v = int(v)
            if v == 0:
                if cur:
                    routes.append(cur)
                cur = []
            else:
                cur.append(v)
        if cur:
            routes.append(cur)
        return cls(routes)

    @classmethod
    def from_text(cls, text: str) -> "Solution":
        return cls.from_giant_tour(int(t) for t in text.split())

    def __str__(self) -> str:
        return self.to_text()


def partition_errors(n: int, solution: Solution) -> list[str]:
    errs = []
    seen: set[int] = set()
    for k, r in enumerate(solution.routes):
        if not r:
            errs.append(f"route {k} is empty")
        for c in r:
            if not 1 <= c <= n:
                errs.append(f"node {c} out of range")
            elif c in seen:
                errs.append(f"customer {c} duplicated")
            seen.add(c)
    missing = set(range(1, n + 1)) - seen
    if missing:
        errs.append(f"customers missing: {sorted(missing)}")
    return errs


def route_legs(instance: Instance, route) -> list[float]:
    """Leg lengths of one route, return leg included only for closed variants."""
    d = instance.dist
    legs = []
    prev = 0
    for c in route:
        legs.append(float(d[prev, c]))
        prev = c
    if not instance.variant.open:
        legs.append(float(d[prev, 0]))
    return legs


def route_cost(instance: Instance, route) -> float:
    return math.fsum(route_legs(instance, route))


def evaluate(instance: Instance, solution: Solution) -> float:
    """Total travel distance.

    Summed with ``math.fsum`` over all legs, so the result depends only on the
    multiset of legs: permuting routes or reversing a closed route leaves it
    bit-identical.
    """
    errs = partition_errors(instance.n, solution)
    if errs:
        raise StructureError("; ".join(errs))
    return math.fsum(leg for r in solution.routes for leg in route_legs(instance, r))


@dataclass(frozen=True)
class Violation:
    code: str  # partition | capacity | duration | time_window | return_window
    route: int
    node: int
    detail: str = ""


@dataclass
class VerifyReport:
    feasible: bool
    violations: list[Violation] = field(default_factory=list)

    @property
    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def check_route(instance: Instance, route, k: int = 0) -> list[Violation]:
    """All constraint violations of a single route (partition aside)."""
    v = instance.variant
    d = instance.dist
    out: list[Violation] = []
    dem = [int(instance.demand[c]) for c in route]
    delivered = sum(x for x in dem if x > 0)
    collected = -sum(x for x in dem if x < 0)
    if delivered > instance.capacity + EPS:
        out.append(Violation("capacity", k, -1, f"linehaul load {delivered} > {instance.capacity}"))
    if collected > instance.capacity + EPS:
        out.append(Violation("capacity", k, -1, f"backhaul load {collected} > {instance.capacity}"))
    if v.duration_limit:
        length = 0.0
        prev = 0
        for c in route:
            length += float(d[prev, c])
            prev = c
        if not v.open:
            length += float(d[prev, 0])
        if length > instance.duration_limit + EPS:
            out.append(Violation("duration", k, -1, f"length {length:.6f} > {instance.duration_limit}"))
    if v.time_window:
        t = float(instance.tw[0, 0])
        prev = 0
        for c in route:
            start = max(t + float(d[prev, c]) / instance.speed, float(instance.tw[c, 0]))
            if start > instance.tw[c, 1] + EPS:
                out.append(Violation("time_window", k, c, f"start {start:.6f} > latest {instance.tw[c, 1]:.6f}"))
            t = start + float(instance.service_time[c])
            prev = c
        if not v.open and route:
            back = t + float(d[prev, 0]) / instance.speed
            if back > instance.tw[0, 1] + EPS:
                out.append(Violation("return_window", k, prev, f"depot return {back:.6f} > {instance.tw[0, 1]}"))
    return out


def verify(instance: Instance, solution: Solution) -> VerifyReport:
    """Check a solution against every active constraint; never raises."""
    violations = [Violation("partition", -1, -1, e) for e in partition_errors(instance.n, solution)]
    for k, r in enumerate(solution.routes):
        if all(1 <= c <= instance.n for c in r):
            violations.extend(check_route(instance, r, k))
    return VerifyReport(not violations, violations)
