"""Brute-force optimum by enumerating every set partition and every visiting order.

Shares nothing with the dynamic program except the instance and the verifier,
so it serves as an independent check for small ``n`` (7 customers take about
a second).
"""

from __future__ import annotations

import itertools
import math

from mtlkd.core.instance import Instance
from mtlkd.core.solution import Solution, check_route, evaluate, route_cost


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first], *part]
        for k in range(len(part)):
            yield part[:k] + [[first, *part[k]]] + part[k + 1 :]


def best_route_orders(instance: Instance) -> dict[frozenset, tuple[float, tuple[int, ...]]]:
    """Cheapest feasible order for every customer subset that has one."""
    best: dict[frozenset, tuple[float, tuple[int, ...]]] = {}
    customers = range(1, instance.n + 1)
    for size in range(1, instance.n + 1):
        for subset in itertools.combinations(customers, size):
            for order in itertools.permutations(subset):
                if check_route(instance, order):
                    continue
                c = route_cost(instance, order)
                key = frozenset(subset)
                if key not in best or c < best[key][0]:
                    best[key] = (c, order)
    return best


def enumerate_optimum(instance: Instance) -> tuple[Solution, float]:
    routes = best_route_orders(instance)
    best_cost, best_sol = math.inf, None
    for part in _set_partitions(list(range(1, instance.n + 1))):
        keys = [frozenset(b) for b in part]
        if not all(k in routes for k in keys):
            continue
        sol = Solution([routes[k][1] for k in keys])
        c = evaluate(instance, sol)
        if c < best_cost:
            best_cost, best_sol = c, sol
    if best_sol is None:
        raise ValueError("instance has no feasible solution")
    return best_sol, best_cost
